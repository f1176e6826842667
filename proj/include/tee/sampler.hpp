#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "tee/geometry.hpp"
#include "tee/synthgen.hpp"

namespace tee {

struct FramePairSample {
  std::string video_id;
  int frame_i = 0;
  int frame_j = 0;
  int interval = 0;  // frame_j - frame_i
  double max_mfi = 0.0;
  SceneryLabel label = SceneryLabel::unchanged;
  int bin = 0;
};

// Ten bins over the semantic-variation range: [0.1*b, 0.1*(b+1)) for b < 9,
// and [0.9, 1.0] for the top bin so that max_mfi == 1 stays binnable.
struct BinLedger {
  std::array<int, 10> counts{};
  int capacity = 0;
  std::array<bool, 10> exhausted{};  // under capacity when the budget ran out

  bool all_full() const {
    for (int c : counts)
      if (c < capacity) return false;
    return true;
  }
};

struct SamplerConfig {
  int bin_capacity = 50;
  int initial_interval = 4;
  int min_interval = 1;
  int max_interval = 30;
  int interval_step = 1;
  uint64_t seed = 0;
  double tau_var = 0.4;
  // sampling attempts allowed per unit of total capacity before giving up
  int attempt_budget_factor = 200;
};

struct SamplerResult {
  std::vector<FramePairSample> samples;
  BinLedger ledger;
  long attempts = 0;
};

int bin_of(double max_mfi);

// Balanced sampling with a dynamically adjusted interval: rejected bins steer
// the interval toward the variation regime whose bins are least filled. Videos
// are drawn uniformly with replacement, which upsamples shorter videos.
SamplerResult sample_balanced_pairs(const std::vector<SyntheticVideo>& videos,
                                    const SamplerConfig& config);

// Label-stratified, deterministic split. fractions = {train, test}, summing
// to 1; boundary values 0 and 1 are allowed.
std::pair<std::vector<FramePairSample>, std::vector<FramePairSample>>
split_dataset(const std::vector<FramePairSample>& samples,
              const std::array<double, 2>& fractions, uint64_t seed);

// Line-delimited JSON records, one sample per line.
void write_pairs(const std::vector<FramePairSample>& samples,
                 const std::filesystem::path& path);
std::vector<FramePairSample> read_pairs(const std::filesystem::path& path);

}  // namespace tee
