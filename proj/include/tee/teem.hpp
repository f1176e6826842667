#pragma once

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "tee/nn.hpp"
#include "tee/tensor.hpp"

namespace tee {

// Which feature map is concatenated with the frame difference before the
// attention convolution. `current_and_diff` follows the module's written
// description; `reference_and_diff` is the alternative operand order.
enum class AttentionConcat { current_and_diff, reference_and_diff };

struct TeemConfig {
  int in_channels = 0;          // channels of the owning backbone tap
  int classifier_channels = 0;  // conv output width ahead of the FC head
  int attention_kernel = 3;
  AttentionConcat concat = AttentionConcat::current_and_diff;
  uint64_t seed = 7;
};

// Two-class verdict of one exit. Class 0 is unchanged, class 1 is changed.
struct ExitLogits {
  std::array<double, 2> scores{};
  std::array<double, 2> probs{};
  double entropy_bits = 0.0;

  // score tie resolves to changed (fail toward full computation)
  bool changed() const { return scores[1] >= scores[0]; }
};

// Shannon entropy in bits of a 2-class distribution; 0*log(0) := 0.
inline double entropy_bits(const std::array<double, 2>& probs) {
  require(probs[0] >= -1e-12 && probs[1] >= -1e-12 &&
              std::abs(probs[0] + probs[1] - 1.0) <= 1e-6,
          ErrorKind::domain, "entropy_bits needs a 2-class distribution");
  double h = 0.0;
  for (double p : probs)
    if (p > 0.0) h -= p * std::log2(p);
  return h;
}

template <typename S>
struct TeemCache {
  nn::ConvCache<S> att_cache;
  FeatureMap<S> attmap;     // post-sigmoid
  FeatureMap<S> z_cur;      // kept for the attention gradient
  nn::ConvCache<S> cls_cache;
  nn::BatchNormCache<S> bn_cache;
  FeatureMap<S> act;        // post-ReLU pre-pooling activations
  Mat<S> pooled;            // C' x batch
};

template <typename S>
struct TeemGrads {
  Mat<S> att_w, att_b;
  Mat<S> cls_w, cls_b;
  Mat<S> bn_gamma, bn_beta;
  Mat<S> fc_w, fc_b;

  std::vector<const Mat<S>*> list() const {
    return {&att_w, &att_b, &cls_w, &cls_b, &bn_gamma, &bn_beta, &fc_w, &fc_b};
  }
};

// Temporal early exit module: a one-channel spatial attention map over the
// (reference, current) tap pair, followed by a two-class change classifier.
template <typename S>
class Teem {
 public:
  Teem() = default;

  explicit Teem(const TeemConfig& config) : config_(config) {
    require(config.in_channels >= 1, ErrorKind::config, "in_channels must be >= 1");
    require(config.classifier_channels >= 1, ErrorKind::config,
            "classifier_channels must be >= 1");
    require(config.attention_kernel % 2 == 1, ErrorKind::config,
            "attention kernel must be odd");
    auto rng = make_rng(config.seed, 0x7ee3);
    att_ = nn::make_conv<S>({2 * config.in_channels, 1, config.attention_kernel, 1,
                             config.attention_kernel / 2},
                            rng);
    cls_ = nn::make_conv<S>({config.in_channels, config.classifier_channels, 3, 1, 1}, rng);
    bn_ = nn::make_batch_norm<S>(config.classifier_channels);
    fc_ = nn::make_linear<S>(config.classifier_channels, 2, rng);
  }

  const TeemConfig& config() const { return config_; }

  // Z_sub = z_cur - z_ref; concat with the configured operand; conv; sigmoid.
  FeatureMap<S> attention_map(const FeatureMap<S>& z_ref, const FeatureMap<S>& z_cur,
                              TeemCache<S>* cache = nullptr) const {
    require(z_ref.same_shape(z_cur), ErrorKind::shape,
            "attention inputs must share one tap shape");
    require(z_cur.channels == config_.in_channels, ErrorKind::shape,
            "attention input channels mismatch");
    FeatureMap<S> concat = FeatureMap<S>::zeros(2 * z_cur.channels, z_cur.height,
                                                z_cur.width, z_cur.batch);
    const auto& first = (config_.concat == AttentionConcat::current_and_diff) ? z_cur : z_ref;
    concat.data.topRows(z_cur.channels) = first.data;
    concat.data.bottomRows(z_cur.channels) = z_cur.data - z_ref.data;
    FeatureMap<S> attmap = nn::sigmoid(
        nn::conv_forward(att_, concat, cache ? &cache->att_cache : nullptr));
    if (cache) cache->attmap = attmap;
    return attmap;
  }

  // attmap (x) z_cur -> conv -> batch norm -> ReLU -> global average pool ->
  // fully connected; returns two scores per sample.
  Mat<S> classify(const FeatureMap<S>& z_cur, const FeatureMap<S>& attmap,
                  bool training, TeemCache<S>* cache = nullptr) {
    require(attmap.channels == 1 && attmap.height == z_cur.height &&
                attmap.width == z_cur.width && attmap.batch == z_cur.batch,
            ErrorKind::shape, "attention map shape mismatch");
    FeatureMap<S> z_att = z_cur;
    z_att.data = z_cur.data.array().rowwise() * attmap.data.row(0).array();
    FeatureMap<S> pre = nn::conv_forward(cls_, z_att, cache ? &cache->cls_cache : nullptr);
    FeatureMap<S> normed =
        nn::batch_norm_forward(bn_, pre, training, cache ? &cache->bn_cache : nullptr);
    FeatureMap<S> act = nn::relu(normed);
    Mat<S> pooled = nn::global_avg_pool(act);
    Mat<S> scores = nn::linear_forward(fc_, pooled);
    if (cache) {
      cache->z_cur = z_cur;
      cache->act = std::move(act);
      cache->pooled = std::move(pooled);
    }
    return scores;
  }

  Mat<S> forward_batch(const FeatureMap<S>& z_ref, const FeatureMap<S>& z_cur,
                       bool training, TeemCache<S>* cache = nullptr) {
    FeatureMap<S> attmap = attention_map(z_ref, z_cur, cache);
    return classify(z_cur, attmap, training, cache);
  }

  // Inference verdict for a single frame pair (frozen statistics).
  ExitLogits forward(const FeatureMap<S>& z_ref, const FeatureMap<S>& z_cur) {
    require(z_cur.batch == 1, ErrorKind::shape, "forward expects a single pair");
    const Mat<S> scores = forward_batch(z_ref, z_cur, /*training=*/false);
    ExitLogits out;
    out.scores = {static_cast<double>(scores(0, 0)), static_cast<double>(scores(1, 0))};
    const Mat<S> p = nn::softmax(scores);
    out.probs = {static_cast<double>(p(0, 0)), static_cast<double>(p(1, 0))};
    out.entropy_bits = entropy_bits(out.probs);
    return out;
  }

  // Backward through classifier and attention; gradients only for TEEM
  // parameters (the backbone stays frozen by construction).
  TeemGrads<S> backward(const TeemCache<S>& cache, const Mat<S>& dscores) {
    TeemGrads<S> g;
    Mat<S> dpooled;
    auto gfc = nn::linear_backward(fc_, cache.pooled, dscores, &dpooled);
    g.fc_w = std::move(gfc.w);
    g.fc_b = std::move(gfc.b);
    FeatureMap<S> dact =
        nn::global_avg_pool_backward(dpooled, cache.act.height, cache.act.width);
    FeatureMap<S> dnormed = nn::relu_backward(cache.act, dact);
    FeatureMap<S> dpre;
    auto gbn = nn::batch_norm_backward(bn_, cache.bn_cache, dnormed, &dpre);
    g.bn_gamma = std::move(gbn.gamma);
    g.bn_beta = std::move(gbn.beta);
    FeatureMap<S> dz_att;
    auto gcls = nn::conv_backward(cls_, cache.cls_cache, dpre, &dz_att);
    g.cls_w = std::move(gcls.w);
    g.cls_b = std::move(gcls.b);
    // d(attmap) = sum over channels of dz_att * z_cur
    FeatureMap<S> dattmap = FeatureMap<S>::zeros(1, cache.attmap.height,
                                                 cache.attmap.width, cache.attmap.batch);
    dattmap.data.row(0) =
        (dz_att.data.array() * cache.z_cur.data.array()).colwise().sum();
    FeatureMap<S> datt_pre = nn::sigmoid_backward(cache.attmap, dattmap);
    auto gatt = nn::conv_backward(att_, cache.att_cache, datt_pre);
    g.att_w = std::move(gatt.w);
    g.att_b = std::move(gatt.b);
    return g;
  }

  // Evidence map for `target_class`: FC-weighted sum of the pre-pooling
  // classifier channels, min-max scaled to [0,1]; constant maps collapse to 0.
  FeatureMap<S> class_activation_map(const FeatureMap<S>& z_ref,
                                     const FeatureMap<S>& z_cur, int target_class) {
    require(target_class == 0 || target_class == 1, ErrorKind::domain,
            "target_class must be 0 or 1");
    TeemCache<S> cache;
    FeatureMap<S> attmap = attention_map(z_ref, z_cur, &cache);
    classify(z_cur, attmap, /*training=*/false, &cache);
    FeatureMap<S> cam = FeatureMap<S>::zeros(1, cache.act.height, cache.act.width,
                                             cache.act.batch);
    cam.data.row(0) = fc_.w.row(target_class) * cache.act.data;
    const S lo = cam.data.minCoeff();
    const S hi = cam.data.maxCoeff();
    if (hi - lo > S(1e-12))
      cam.data = ((cam.data.array() - lo) / (hi - lo)).matrix();
    else
      cam.data.setZero();
    return cam;
  }

  std::vector<ParamRef<S>> params(const std::string& prefix = "") {
    return {
        {prefix + "att.w", &att_.w},           {prefix + "att.b", &att_.b},
        {prefix + "cls.conv.w", &cls_.w},      {prefix + "cls.conv.b", &cls_.b},
        {prefix + "cls.bn.gamma", &bn_.gamma}, {prefix + "cls.bn.beta", &bn_.beta},
        {prefix + "fc.w", &fc_.w},             {prefix + "fc.b", &fc_.b},
    };
  }

  // Running statistics ride along in checkpoints but are not learnable.
  std::vector<ParamRef<S>> state(const std::string& prefix = "") {
    return {
        {prefix + "cls.bn.running_mean", &bn_.running_mean},
        {prefix + "cls.bn.running_var", &bn_.running_var},
    };
  }

  nn::Conv2d<S>& attention_conv() { return att_; }
  nn::Conv2d<S>& classifier_conv() { return cls_; }
  nn::BatchNorm<S>& batch_norm() { return bn_; }
  nn::Linear<S>& fc() { return fc_; }

 private:
  TeemConfig config_;
  nn::Conv2d<S> att_;  // 2C -> 1
  nn::Conv2d<S> cls_;  // C -> C'
  nn::BatchNorm<S> bn_;
  nn::Linear<S> fc_;   // C' -> 2
};

}  // namespace tee
