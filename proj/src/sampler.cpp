#include "tee/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include "tee/error.hpp"
#include "tee/jsonio.hpp"
#include "tee/rng.hpp"

namespace tee {

int bin_of(double max_mfi) {
  require(max_mfi >= 0.0 && max_mfi <= 1.0, ErrorKind::domain,
          "max_mfi outside [0,1]: " + std::to_string(max_mfi));
  const int b = static_cast<int>(std::floor(max_mfi * 10.0));
  return std::min(b, 9);
}

SamplerResult sample_balanced_pairs(const std::vector<SyntheticVideo>& videos,
                                    const SamplerConfig& config) {
  require(config.bin_capacity >= 1, ErrorKind::config, "bin_capacity must be >= 1");
  require(1 <= config.min_interval && config.min_interval <= config.initial_interval &&
              config.initial_interval <= config.max_interval,
          ErrorKind::config, "need 1 <= min <= initial <= max interval");
  require(config.interval_step >= 1, ErrorKind::config, "interval_step must be >= 1");
  bool usable = false;
  for (const auto& v : videos) usable = usable || v.frames.size() >= 2;
  require(usable, ErrorKind::config, "need at least one video with >= 2 frames");

  SamplerResult result;
  result.ledger.capacity = config.bin_capacity;
  const long budget =
      static_cast<long>(config.attempt_budget_factor) * 10L * config.bin_capacity;

  std::mt19937_64 rng(derive_seed(config.seed, 0xb1f5));
  std::uniform_int_distribution<size_t> pick_video(0, videos.size() - 1);

  int interval = config.initial_interval;
  // exponentially weighted estimate of the bin the current interval lands in
  double expected_bin = 4.5;
  const double alpha = 0.05;

  auto deficit_target = [&]() -> double {
    double num = 0.0, den = 0.0;
    for (int b = 0; b < 10; ++b) {
      const double deficit = config.bin_capacity - result.ledger.counts[b];
      if (deficit > 0) {
        num += deficit * b;
        den += deficit;
      }
    }
    return den > 0 ? num / den : -1.0;
  };

  while (result.attempts < budget && !result.ledger.all_full()) {
    ++result.attempts;
    const SyntheticVideo& video = videos[pick_video(rng)];
    const int len = static_cast<int>(video.frames.size());
    if (len < 2) continue;
    const int j_eff = std::min(interval, len - 1);
    std::uniform_int_distribution<int> pick_frame(0, len - 1 - j_eff);
    const int fi = pick_frame(rng);
    const int fj = fi + j_eff;

    const double mfi =
        motion_field(video.frames[fi].annotations, video.frames[fj].annotations)
            .max_motion();
    const int bin = bin_of(mfi);
    expected_bin = (1.0 - alpha) * expected_bin + alpha * bin;

    if (result.ledger.counts[bin] < config.bin_capacity) {
      FramePairSample s;
      s.video_id = video.video_id;
      s.frame_i = fi;
      s.frame_j = fj;
      s.interval = j_eff;
      s.max_mfi = mfi;
      s.label = mfi > config.tau_var ? SceneryLabel::changed : SceneryLabel::unchanged;
      s.bin = bin;
      result.samples.push_back(std::move(s));
      ++result.ledger.counts[bin];
    }

    // steer the interval toward the under-filled variation regime: longer
    // intervals raise variation, shorter ones lower it
    const double target = deficit_target();
    if (target >= 0.0) {
      if (target > expected_bin + 0.25)
        interval += config.interval_step;
      else if (target < expected_bin - 0.25)
        interval -= config.interval_step;
      interval = std::clamp(interval, config.min_interval, config.max_interval);
    }
  }

  for (int b = 0; b < 10; ++b)
    result.ledger.exhausted[b] = result.ledger.counts[b] < config.bin_capacity;
  return result;
}

std::pair<std::vector<FramePairSample>, std::vector<FramePairSample>>
split_dataset(const std::vector<FramePairSample>& samples,
              const std::array<double, 2>& fractions, uint64_t seed) {
  for (double f : fractions)
    require(f >= 0.0 && f <= 1.0, ErrorKind::config,
            "split fraction outside [0,1]: " + std::to_string(f));
  require(std::abs(fractions[0] + fractions[1] - 1.0) < 1e-9, ErrorKind::config,
          "split fractions must sum to 1");

  // indices per label, shuffled deterministically
  std::array<std::vector<size_t>, 2> by_label;
  for (size_t i = 0; i < samples.size(); ++i)
    by_label[static_cast<int>(samples[i].label)].push_back(i);
  std::mt19937_64 rng(derive_seed(seed, 0x5117));
  for (auto& idx : by_label) std::shuffle(idx.begin(), idx.end(), rng);

  const auto total_train =
      static_cast<size_t>(std::llround(fractions[0] * static_cast<double>(samples.size())));
  // per-label floor quotas, remainder to the largest fractional parts
  std::array<size_t, 2> quota{};
  std::array<double, 2> frac_part{};
  size_t assigned = 0;
  for (int l = 0; l < 2; ++l) {
    const double exact = fractions[0] * static_cast<double>(by_label[l].size());
    quota[l] = static_cast<size_t>(std::floor(exact));
    frac_part[l] = exact - static_cast<double>(quota[l]);
    assigned += quota[l];
  }
  while (assigned < total_train) {
    const int l = (frac_part[0] >= frac_part[1]) ? 0 : 1;
    if (quota[l] < by_label[l].size()) {
      ++quota[l];
      frac_part[l] = -1.0;
    } else {
      const int other = 1 - l;
      require(quota[other] < by_label[other].size(), ErrorKind::config,
              "split quota exceeds sample count");
      ++quota[other];
    }
    ++assigned;
  }

  std::pair<std::vector<FramePairSample>, std::vector<FramePairSample>> out;
  for (int l = 0; l < 2; ++l) {
    for (size_t k = 0; k < by_label[l].size(); ++k) {
      const FramePairSample& s = samples[by_label[l][k]];
      if (k < quota[l])
        out.first.push_back(s);
      else
        out.second.push_back(s);
    }
  }
  return out;
}

namespace {

Json sample_to_json(const FramePairSample& s) {
  Json j;
  j["video_id"] = s.video_id;
  j["frame_i"] = s.frame_i;
  j["frame_j"] = s.frame_j;
  j["interval"] = s.interval;
  j["max_mfi"] = s.max_mfi;
  j["label"] = static_cast<int>(s.label);
  j["bin"] = s.bin;
  return j;
}

FramePairSample sample_from_json(const Json& j, const std::string& ctx) {
  check_keys(j, {"video_id", "frame_i", "frame_j", "interval", "max_mfi", "label", "bin"}, ctx);
  FramePairSample s;
  s.video_id = get_required<std::string>(j, "video_id", ctx);
  s.frame_i = get_required<int>(j, "frame_i", ctx);
  s.frame_j = get_required<int>(j, "frame_j", ctx);
  s.interval = get_required<int>(j, "interval", ctx);
  s.max_mfi = get_required<double>(j, "max_mfi", ctx);
  const int label = get_required<int>(j, "label", ctx);
  require(label == 0 || label == 1, ErrorKind::schema, ctx + ": label must be 0 or 1");
  s.label = static_cast<SceneryLabel>(label);
  s.bin = get_required<int>(j, "bin", ctx);
  require(s.frame_j > s.frame_i, ErrorKind::schema, ctx + ": frame_j must exceed frame_i");
  require(s.bin == bin_of(s.max_mfi), ErrorKind::schema, ctx + ": bin inconsistent with max_mfi");
  return s;
}

}  // namespace

void write_pairs(const std::vector<FramePairSample>& samples,
                 const std::filesystem::path& path) {
  std::ofstream out(path);
  require(out.good(), ErrorKind::io, "cannot open for writing " + path.string());
  for (const auto& s : samples) out << sample_to_json(s).dump() << "\n";
  require(out.good(), ErrorKind::io, "write failed: " + path.string());
}

std::vector<FramePairSample> read_pairs(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(in.good(), ErrorKind::io, "cannot open " + path.string());
  std::vector<FramePairSample> samples;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::exception& e) {
      fail(ErrorKind::schema,
           path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
    samples.push_back(sample_from_json(j, path.string() + ":" + std::to_string(line_no)));
  }
  return samples;
}

}  // namespace tee
