#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "tee/rng.hpp"
#include "tee/tensor.hpp"

// Minimal CNN toolkit: im2col convolutions, batch norm, fully connected,
// activations and Adam, all on Eigen dense matrices. Forward functions return
// plain FeatureMaps; backward functions take the caches produced alongside.
namespace tee::nn {

struct Conv2dSpec {
  int in_ch = 0;
  int out_ch = 0;
  int kernel = 3;
  int stride = 1;
  int pad = 0;

  int out_dim(int in) const { return (in + 2 * pad - kernel) / stride + 1; }
  // patch rows are ordered (ky, kx, c) so im2col can copy whole channel
  // columns at once
  int patch_rows() const { return in_ch * kernel * kernel; }
};

template <typename S>
struct Conv2d {
  Conv2dSpec spec;
  Mat<S> w;  // out_ch x patch_rows
  Mat<S> b;  // out_ch x 1
};

template <typename S>
Conv2d<S> make_conv(const Conv2dSpec& spec, std::mt19937_64& rng) {
  Conv2d<S> c;
  c.spec = spec;
  const double fan_in = spec.patch_rows();
  std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / fan_in));
  c.w = Mat<S>(spec.out_ch, spec.patch_rows());
  for (Eigen::Index j = 0; j < c.w.cols(); ++j)
    for (Eigen::Index i = 0; i < c.w.rows(); ++i)
      c.w(i, j) = static_cast<S>(dist(rng));
  c.b = Mat<S>::Zero(spec.out_ch, 1);
  return c;
}

template <typename S>
Mat<S> im2col(const FeatureMap<S>& x, const Conv2dSpec& spec) {
  require(x.channels == spec.in_ch, ErrorKind::shape,
          "conv input channels mismatch");
  const int oh = spec.out_dim(x.height);
  const int ow = spec.out_dim(x.width);
  require(oh > 0 && ow > 0, ErrorKind::shape, "conv output collapsed to zero");
  const int k = spec.kernel;
  const int c_in = spec.in_ch;
  Mat<S> patches = Mat<S>::Zero(spec.patch_rows(),
                                static_cast<Eigen::Index>(x.batch) * oh * ow);
  for (int s = 0; s < x.batch; ++s) {
    const Eigen::Index in_base = static_cast<Eigen::Index>(s) * x.pixels();
    const Eigen::Index out_base = static_cast<Eigen::Index>(s) * oh * ow;
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        const Eigen::Index col = out_base + static_cast<Eigen::Index>(oy) * ow + ox;
        for (int ky = 0; ky < k; ++ky) {
          const int iy = oy * spec.stride + ky - spec.pad;
          if (iy < 0 || iy >= x.height) continue;
          for (int kx = 0; kx < k; ++kx) {
            const int ix = ox * spec.stride + kx - spec.pad;
            if (ix < 0 || ix >= x.width) continue;
            patches.col(col).segment((ky * k + kx) * c_in, c_in) =
                x.data.col(in_base + static_cast<Eigen::Index>(iy) * x.width + ix);
          }
        }
      }
    }
  }
  return patches;
}

template <typename S>
FeatureMap<S> col2im(const Mat<S>& patches, const Conv2dSpec& spec, int height,
                     int width, int batch) {
  const int oh = spec.out_dim(height);
  const int ow = spec.out_dim(width);
  const int k = spec.kernel;
  const int c_in = spec.in_ch;
  FeatureMap<S> x = FeatureMap<S>::zeros(c_in, height, width, batch);
  for (int s = 0; s < batch; ++s) {
    const Eigen::Index in_base = static_cast<Eigen::Index>(s) * height * width;
    const Eigen::Index out_base = static_cast<Eigen::Index>(s) * oh * ow;
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        const Eigen::Index col = out_base + static_cast<Eigen::Index>(oy) * ow + ox;
        for (int ky = 0; ky < k; ++ky) {
          const int iy = oy * spec.stride + ky - spec.pad;
          if (iy < 0 || iy >= height) continue;
          for (int kx = 0; kx < k; ++kx) {
            const int ix = ox * spec.stride + kx - spec.pad;
            if (ix < 0 || ix >= width) continue;
            x.data.col(in_base + static_cast<Eigen::Index>(iy) * width + ix) +=
                patches.col(col).segment((ky * k + kx) * c_in, c_in);
          }
        }
      }
    }
  }
  return x;
}

template <typename S>
struct ConvCache {
  Mat<S> patches;  // im2col of the input, kept for dW
  int in_height = 0;
  int in_width = 0;
  int batch = 0;
};

template <typename S>
FeatureMap<S> conv_forward(const Conv2d<S>& conv, const FeatureMap<S>& x,
                           ConvCache<S>* cache = nullptr) {
  Mat<S> patches = im2col(x, conv.spec);
  FeatureMap<S> y;
  y.channels = conv.spec.out_ch;
  y.height = conv.spec.out_dim(x.height);
  y.width = conv.spec.out_dim(x.width);
  y.batch = x.batch;
  y.data.noalias() = conv.w * patches;
  y.data.colwise() += conv.b.col(0);
  if (cache) {
    cache->patches = std::move(patches);
    cache->in_height = x.height;
    cache->in_width = x.width;
    cache->batch = x.batch;
  }
  return y;
}

template <typename S>
struct ConvGrads {
  Mat<S> w;
  Mat<S> b;
};

// dy must match the forward output shape. dx is optional (frozen inputs).
template <typename S>
ConvGrads<S> conv_backward(const Conv2d<S>& conv, const ConvCache<S>& cache,
                           const FeatureMap<S>& dy,
                           FeatureMap<S>* dx = nullptr) {
  ConvGrads<S> g;
  g.w.noalias() = dy.data * cache.patches.transpose();
  g.b = dy.data.rowwise().sum();
  if (dx) {
    Mat<S> dpatches;
    dpatches.noalias() = conv.w.transpose() * dy.data;
    *dx = col2im(dpatches, conv.spec, cache.in_height, cache.in_width,
                 cache.batch);
  }
  return g;
}

template <typename S>
FeatureMap<S> relu(const FeatureMap<S>& x) {
  FeatureMap<S> y = x;
  y.data = y.data.cwiseMax(S(0));
  return y;
}

// dy masked by the forward *output* (y > 0 iff x > 0).
template <typename S>
FeatureMap<S> relu_backward(const FeatureMap<S>& y, const FeatureMap<S>& dy) {
  FeatureMap<S> dx = dy;
  dx.data = (y.data.array() > S(0)).template cast<S>() * dy.data.array();
  return dx;
}

template <typename S>
FeatureMap<S> sigmoid(const FeatureMap<S>& x) {
  FeatureMap<S> y = x;
  y.data = (S(1) / (S(1) + (-x.data.array()).exp())).matrix();
  return y;
}

template <typename S>
FeatureMap<S> sigmoid_backward(const FeatureMap<S>& y, const FeatureMap<S>& dy) {
  FeatureMap<S> dx = dy;
  dx.data = (dy.data.array() * y.data.array() * (S(1) - y.data.array())).matrix();
  return dx;
}

template <typename S>
struct BatchNorm {
  Mat<S> gamma;         // C x 1
  Mat<S> beta;          // C x 1
  Mat<S> running_mean;  // C x 1
  Mat<S> running_var;   // C x 1
  double momentum = 0.1;
  double eps = 1e-5;
};

template <typename S>
BatchNorm<S> make_batch_norm(int channels) {
  BatchNorm<S> bn;
  bn.gamma = Mat<S>::Ones(channels, 1);
  bn.beta = Mat<S>::Zero(channels, 1);
  bn.running_mean = Mat<S>::Zero(channels, 1);
  bn.running_var = Mat<S>::Ones(channels, 1);
  return bn;
}

template <typename S>
struct BatchNormCache {
  Mat<S> x_hat;
  Mat<S> inv_std;  // C x 1
};

// Batch statistics are taken per channel over batch and spatial positions.
template <typename S>
FeatureMap<S> batch_norm_forward(BatchNorm<S>& bn, const FeatureMap<S>& x,
                                 bool training,
                                 BatchNormCache<S>* cache = nullptr) {
  const Eigen::Index n = x.data.cols();
  FeatureMap<S> y = x;
  Mat<S> mean, var;
  if (training) {
    mean = x.data.rowwise().mean();
    Mat<S> centered = x.data.colwise() - mean.col(0);
    var = centered.array().square().matrix().rowwise().mean();
    bn.running_mean = (S(1) - S(bn.momentum)) * bn.running_mean + S(bn.momentum) * mean;
    bn.running_var = (S(1) - S(bn.momentum)) * bn.running_var + S(bn.momentum) * var;
    Mat<S> inv_std = (var.array() + S(bn.eps)).rsqrt().matrix();
    Mat<S> x_hat = centered.array().colwise() * inv_std.col(0).array();
    y.data = (x_hat.array().colwise() * bn.gamma.col(0).array()).matrix();
    y.data.colwise() += bn.beta.col(0);
    if (cache) {
      cache->x_hat = std::move(x_hat);
      cache->inv_std = std::move(inv_std);
    }
  } else {
    Mat<S> inv_std = (bn.running_var.array() + S(bn.eps)).rsqrt().matrix();
    Mat<S> x_hat =
        (x.data.colwise() - bn.running_mean.col(0)).array().colwise() *
        inv_std.col(0).array();
    y.data = (x_hat.array().colwise() * bn.gamma.col(0).array()).matrix();
    y.data.colwise() += bn.beta.col(0);
    if (cache) {
      cache->x_hat = std::move(x_hat);
      cache->inv_std = std::move(inv_std);
    }
  }
  (void)n;
  return y;
}

template <typename S>
struct BatchNormGrads {
  Mat<S> gamma;
  Mat<S> beta;
};

// Training-mode backward (batch statistics participate in the gradient).
template <typename S>
BatchNormGrads<S> batch_norm_backward(const BatchNorm<S>& bn,
                                      const BatchNormCache<S>& cache,
                                      const FeatureMap<S>& dy,
                                      FeatureMap<S>* dx = nullptr) {
  BatchNormGrads<S> g;
  g.gamma = (dy.data.array() * cache.x_hat.array()).matrix().rowwise().sum();
  g.beta = dy.data.rowwise().sum();
  if (dx) {
    const S n = static_cast<S>(dy.data.cols());
    *dx = dy;
    // dx = gamma * inv_std / n * (n*dy - sum(dy) - x_hat * sum(dy*x_hat))
    Mat<S> term = n * dy.data;
    term.colwise() -= g.beta.col(0);
    term -= (cache.x_hat.array().colwise() * g.gamma.col(0).array()).matrix();
    dx->data = (term.array().colwise() *
                (bn.gamma.col(0).array() * cache.inv_std.col(0).array() / n))
                   .matrix();
  }
  return g;
}

// Global average pool: one value per channel per sample.
template <typename S>
Mat<S> global_avg_pool(const FeatureMap<S>& x) {
  Mat<S> out(x.channels, x.batch);
  const S scale = S(1) / static_cast<S>(x.pixels());
  for (int s = 0; s < x.batch; ++s)
    out.col(s) = x.sample(s).rowwise().sum() * scale;
  return out;
}

template <typename S>
FeatureMap<S> global_avg_pool_backward(const Mat<S>& dout, int height,
                                       int width) {
  FeatureMap<S> dx = FeatureMap<S>::zeros(static_cast<int>(dout.rows()), height,
                                          width, static_cast<int>(dout.cols()));
  const S scale = S(1) / static_cast<S>(height * width);
  for (int s = 0; s < dx.batch; ++s)
    dx.sample(s).colwise() = (dout.col(s) * scale).eval();
  return dx;
}

template <typename S>
struct Linear {
  Mat<S> w;  // out x in
  Mat<S> b;  // out x 1
};

template <typename S>
Linear<S> make_linear(int in, int out, std::mt19937_64& rng) {
  Linear<S> l;
  std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / in));
  l.w = Mat<S>(out, in);
  for (Eigen::Index j = 0; j < l.w.cols(); ++j)
    for (Eigen::Index i = 0; i < l.w.rows(); ++i)
      l.w(i, j) = static_cast<S>(dist(rng));
  l.b = Mat<S>::Zero(out, 1);
  return l;
}

template <typename S>
Mat<S> linear_forward(const Linear<S>& l, const Mat<S>& x) {
  Mat<S> y;
  y.noalias() = l.w * x;
  y.colwise() += l.b.col(0);
  return y;
}

template <typename S>
struct LinearGrads {
  Mat<S> w;
  Mat<S> b;
};

template <typename S>
LinearGrads<S> linear_backward(const Linear<S>& l, const Mat<S>& x,
                               const Mat<S>& dy, Mat<S>* dx = nullptr) {
  LinearGrads<S> g;
  g.w.noalias() = dy * x.transpose();
  g.b = dy.rowwise().sum();
  if (dx) dx->noalias() = l.w.transpose() * dy;
  return g;
}

// Column-wise softmax.
template <typename S>
Mat<S> softmax(const Mat<S>& scores) {
  Mat<S> p = scores;
  for (Eigen::Index c = 0; c < p.cols(); ++c) {
    auto col = p.col(c);
    col.array() -= col.maxCoeff();
    col = col.array().exp().matrix();
    col /= col.sum();
  }
  return p;
}

// Mean cross-entropy over the batch; writes dL/dscores into dscores.
template <typename S>
S softmax_cross_entropy(const Mat<S>& scores, const std::vector<int>& targets,
                        Mat<S>* dscores = nullptr) {
  require(scores.cols() == static_cast<Eigen::Index>(targets.size()),
          ErrorKind::shape, "target count mismatch");
  Mat<S> p = softmax(scores);
  S loss = S(0);
  for (Eigen::Index c = 0; c < p.cols(); ++c) {
    const S q = std::max(p(targets[c], c), S(1e-30));
    loss -= std::log(q);
  }
  loss /= static_cast<S>(p.cols());
  if (dscores) {
    *dscores = p;
    for (Eigen::Index c = 0; c < p.cols(); ++c) (*dscores)(targets[c], c) -= S(1);
    *dscores /= static_cast<S>(p.cols());
  }
  return loss;
}

// Adam over a flat list of parameter tensors; state order follows the list.
template <typename S>
class Adam {
 public:
  Adam(double lr = 1e-3, double beta1 = 0.9, double beta2 = 0.999,
       double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(const std::vector<ParamRef<S>>& params,
            const std::vector<const Mat<S>*>& grads) {
    require(params.size() == grads.size(), ErrorKind::shape,
            "param/grad count mismatch");
    if (m_.empty()) {
      for (const auto& p : params) {
        m_.push_back(Mat<S>::Zero(p.value->rows(), p.value->cols()));
        v_.push_back(Mat<S>::Zero(p.value->rows(), p.value->cols()));
      }
    }
    ++t_;
    const S bc1 = S(1) - static_cast<S>(std::pow(beta1_, t_));
    const S bc2 = S(1) - static_cast<S>(std::pow(beta2_, t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
      Mat<S>& m = m_[i];
      Mat<S>& v = v_[i];
      const Mat<S>& g = *grads[i];
      m = S(beta1_) * m + (S(1) - S(beta1_)) * g;
      v = S(beta2_) * v + (S(1) - S(beta2_)) * g.cwiseProduct(g);
      params[i].value->array() -=
          S(lr_) * (m.array() / bc1) /
          ((v.array() / bc2).sqrt() + S(eps_));
    }
  }

  long steps() const { return t_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  std::vector<Mat<S>> m_;
  std::vector<Mat<S>> v_;
};

}  // namespace tee::nn
