#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "tee/nn.hpp"
#include "tee/tensor.hpp"

namespace tee {

struct StageSpec {
  int channels = 0;
  int blocks = 1;  // residual blocks after the stage's lead convolution
};

struct BackboneConfig {
  int input_size = 224;
  std::array<StageSpec, 4> stages{{{16, 1}, {32, 1}, {64, 1}, {128, 1}}};
  uint64_t seed = 1;
};

struct StageShape {
  int channels = 0;
  int height = 0;
  int width = 0;
};

// Analytic tap shapes. The stem halves the input twice (4x total), stage 1
// keeps that resolution, stages 2..4 halve again; all downsampling uses 2x2
// stride-2 convolutions, so spatial sizes follow exact floor division.
inline std::array<StageShape, 4> stage_shapes(const BackboneConfig& config) {
  std::array<StageShape, 4> shapes;
  int s = config.input_size / 2 / 2;
  for (int l = 0; l < 4; ++l) {
    if (l > 0) s = s / 2;
    shapes[l] = StageShape{config.stages[l].channels, s, s};
  }
  return shapes;
}

template <typename S>
struct ResidualBlock {
  nn::Conv2d<S> conv1;
  nn::Conv2d<S> conv2;
};

template <typename S>
struct BackboneStage {
  bool has_down = false;
  nn::Conv2d<S> down;  // 2x2 stride 2, only stages 2..4
  std::vector<ResidualBlock<S>> blocks;
};

// Per-layer caches needed to backpropagate a full forward pass (detector
// pretraining). TEEM training never touches these; the backbone is frozen
// there and only the forward path runs.
template <typename S>
struct BackboneCache {
  nn::ConvCache<S> stem1_cache, stem2_cache;
  FeatureMap<S> stem1_out, stem2_out;  // post-ReLU
  struct StageCache {
    nn::ConvCache<S> down_cache;
    FeatureMap<S> down_out;  // post-ReLU
    struct BlockCache {
      nn::ConvCache<S> conv1_cache, conv2_cache;
      FeatureMap<S> hidden;  // post-ReLU between the convs
      FeatureMap<S> out;     // post-ReLU block output
    };
    std::vector<BlockCache> blocks;
  };
  std::array<StageCache, 4> stages;
};

template <typename S>
class Backbone {
 public:
  Backbone() = default;

  explicit Backbone(const BackboneConfig& config) : config_(config) {
    require(config.input_size >= 32, ErrorKind::config,
            "input_size must be >= 32 so every tap stays non-empty");
    for (const auto& st : config.stages)
      require(st.channels >= 1 && st.blocks >= 1, ErrorKind::config,
              "stage channels and blocks must be >= 1");
    auto rng = make_rng(config.seed, 0xbacb);
    const int c1 = config.stages[0].channels;
    stem1_ = nn::make_conv<S>({3, c1, 2, 2, 0}, rng);
    stem2_ = nn::make_conv<S>({c1, c1, 2, 2, 0}, rng);
    int in_ch = c1;
    for (int l = 0; l < 4; ++l) {
      BackboneStage<S>& stage = stages_[l];
      const int out_ch = config.stages[l].channels;
      if (l > 0) {
        stage.has_down = true;
        stage.down = nn::make_conv<S>({in_ch, out_ch, 2, 2, 0}, rng);
      } else {
        require(out_ch == in_ch, ErrorKind::config, "stage 1 keeps stem width");
      }
      for (int b = 0; b < config.stages[l].blocks; ++b) {
        ResidualBlock<S> block;
        block.conv1 = nn::make_conv<S>({out_ch, out_ch, 3, 1, 1}, rng);
        block.conv2 = nn::make_conv<S>({out_ch, out_ch, 3, 1, 1}, rng);
        stage.blocks.push_back(std::move(block));
      }
      in_ch = out_ch;
    }
  }

  const BackboneConfig& config() const { return config_; }

  // [0,1] intensities to the fixed input domain: subtract 0.5, divide by 0.25.
  static FeatureMap<S> normalize(const FeatureMap<S>& image01) {
    FeatureMap<S> x = image01;
    x.data = (x.data.array() - S(0.5)) * S(4);
    return x;
  }

  // Stem plus stages 1..upto on a normalized input; returns all taps.
  std::vector<FeatureMap<S>> forward_taps(const FeatureMap<S>& normalized,
                                          int upto,
                                          BackboneCache<S>* cache = nullptr) const {
    require(upto >= 1 && upto <= 4, ErrorKind::shape, "stage index must be 1..4");
    require(normalized.channels == 3 && normalized.height == config_.input_size &&
                normalized.width == config_.input_size,
            ErrorKind::shape,
            "backbone expects a 3x" + std::to_string(config_.input_size) + "x" +
                std::to_string(config_.input_size) + " input");
    FeatureMap<S> x = nn::relu(nn::conv_forward(stem1_, normalized,
                                                cache ? &cache->stem1_cache : nullptr));
    if (cache) cache->stem1_out = x;
    x = nn::relu(nn::conv_forward(stem2_, x, cache ? &cache->stem2_cache : nullptr));
    if (cache) cache->stem2_out = x;

    std::vector<FeatureMap<S>> taps;
    for (int l = 0; l < upto; ++l) {
      x = forward_stage_impl(x, l, cache ? &cache->stages[l] : nullptr);
      taps.push_back(x);
    }
    return taps;
  }

  FeatureMap<S> forward_to_stage(const FeatureMap<S>& normalized, int l) const {
    auto taps = forward_taps(normalized, l);
    return std::move(taps.back());
  }

  FeatureMap<S> forward_full(const FeatureMap<S>& normalized) const {
    return forward_to_stage(normalized, 4);
  }

  // Runs stage l (1-based) on the previous stage's output, so cached taps can
  // be extended without recomputing the trunk.
  FeatureMap<S> forward_stage(const FeatureMap<S>& input, int l) const {
    require(l >= 1 && l <= 4, ErrorKind::shape, "stage index must be 1..4");
    return forward_stage_impl(input, l - 1, nullptr);
  }

  // Gradient of a loss w.r.t. all backbone parameters, given d(tap upto).
  // Aligned with params() order.
  std::vector<Mat<S>> backward(const BackboneCache<S>& cache,
                               const FeatureMap<S>& d_tap, int upto) {
    std::vector<Mat<S>> grads(param_count());
    FeatureMap<S> dx = d_tap;
    int g = static_cast<int>(grads.size());
    // walk stages in reverse; fill gradient slots back to front
    for (int l = 3; l >= 0; --l) {
      const int slots = stage_param_count(l);
      if (l >= upto) {
        g -= slots;
        for (int k = 0; k < slots; ++k)
          grads[g + k] = zero_like_stage_param(l, k);
        continue;
      }
      g -= slots;
      int k = slots;
      const auto& stage = stages_[l];
      const auto& scache = cache.stages[l];
      for (int b = static_cast<int>(stage.blocks.size()) - 1; b >= 0; --b) {
        const auto& block = stage.blocks[b];
        const auto& bcache = scache.blocks[b];
        FeatureMap<S> dz = nn::relu_backward(bcache.out, dx);
        FeatureMap<S> dh;
        auto g2 = nn::conv_backward(block.conv2, bcache.conv2_cache, dz, &dh);
        dh = nn::relu_backward(bcache.hidden, dh);
        FeatureMap<S> dblock_in;
        auto g1 = nn::conv_backward(block.conv1, bcache.conv1_cache, dh, &dblock_in);
        dblock_in.data += dz.data;  // skip connection
        dx = std::move(dblock_in);
        grads[g + k - 1] = std::move(g2.b);
        grads[g + k - 2] = std::move(g2.w);
        grads[g + k - 3] = std::move(g1.b);
        grads[g + k - 4] = std::move(g1.w);
        k -= 4;
      }
      if (stage.has_down) {
        FeatureMap<S> dpre = nn::relu_backward(scache.down_out, dx);
        FeatureMap<S> dprev;
        auto gd = nn::conv_backward(stage.down, scache.down_cache, dpre, &dprev);
        dx = std::move(dprev);
        grads[g + 1] = std::move(gd.b);
        grads[g + 0] = std::move(gd.w);
      }
    }
    // stem
    FeatureMap<S> d2 = nn::relu_backward(cache.stem2_out, dx);
    FeatureMap<S> d1_out;
    auto gs2 = nn::conv_backward(stem2_, cache.stem2_cache, d2, &d1_out);
    d1_out = nn::relu_backward(cache.stem1_out, d1_out);
    auto gs1 = nn::conv_backward(stem1_, cache.stem1_cache, d1_out);
    grads[0] = std::move(gs1.w);
    grads[1] = std::move(gs1.b);
    grads[2] = std::move(gs2.w);
    grads[3] = std::move(gs2.b);
    return grads;
  }

  std::vector<ParamRef<S>> params() {
    std::vector<ParamRef<S>> out;
    out.push_back({"stem.conv1.w", &stem1_.w});
    out.push_back({"stem.conv1.b", &stem1_.b});
    out.push_back({"stem.conv2.w", &stem2_.w});
    out.push_back({"stem.conv2.b", &stem2_.b});
    for (int l = 0; l < 4; ++l) {
      const std::string prefix = "stage" + std::to_string(l + 1) + ".";
      auto& stage = stages_[l];
      if (stage.has_down) {
        out.push_back({prefix + "down.w", &stage.down.w});
        out.push_back({prefix + "down.b", &stage.down.b});
      }
      for (size_t b = 0; b < stage.blocks.size(); ++b) {
        const std::string bp = prefix + "block" + std::to_string(b + 1) + ".";
        out.push_back({bp + "conv1.w", &stage.blocks[b].conv1.w});
        out.push_back({bp + "conv1.b", &stage.blocks[b].conv1.b});
        out.push_back({bp + "conv2.w", &stage.blocks[b].conv2.w});
        out.push_back({bp + "conv2.b", &stage.blocks[b].conv2.b});
      }
    }
    return out;
  }

  size_t param_count() {
    size_t n = 4;
    for (int l = 0; l < 4; ++l) n += stage_param_count(l);
    return n;
  }

 private:
  int stage_param_count(int l) const {
    return (stages_[l].has_down ? 2 : 0) +
           4 * static_cast<int>(stages_[l].blocks.size());
  }

  Mat<S> zero_like_stage_param(int l, int k) const {
    const auto& stage = stages_[l];
    std::vector<const Mat<S>*> slots;
    if (stage.has_down) {
      slots.push_back(&stage.down.w);
      slots.push_back(&stage.down.b);
    }
    for (const auto& b : stage.blocks) {
      slots.push_back(&b.conv1.w);
      slots.push_back(&b.conv1.b);
      slots.push_back(&b.conv2.w);
      slots.push_back(&b.conv2.b);
    }
    return Mat<S>::Zero(slots[k]->rows(), slots[k]->cols());
  }

  FeatureMap<S> forward_stage_impl(
      const FeatureMap<S>& input, int l,
      typename BackboneCache<S>::StageCache* cache) const {
    const auto& stage = stages_[l];
    FeatureMap<S> x = input;
    if (stage.has_down) {
      x = nn::relu(nn::conv_forward(stage.down, x, cache ? &cache->down_cache : nullptr));
      if (cache) cache->down_out = x;
    }
    if (cache) cache->blocks.resize(stage.blocks.size());
    for (size_t b = 0; b < stage.blocks.size(); ++b) {
      auto* bc = cache ? &cache->blocks[b] : nullptr;
      FeatureMap<S> h = nn::relu(
          nn::conv_forward(stage.blocks[b].conv1, x, bc ? &bc->conv1_cache : nullptr));
      if (bc) bc->hidden = h;
      FeatureMap<S> y =
          nn::conv_forward(stage.blocks[b].conv2, h, bc ? &bc->conv2_cache : nullptr);
      y.data += x.data;  // skip
      y = nn::relu(y);
      if (bc) bc->out = y;
      x = std::move(y);
    }
    return x;
  }

  BackboneConfig config_;
  nn::Conv2d<S> stem1_, stem2_;
  std::array<BackboneStage<S>, 4> stages_;
};

}  // namespace tee
