#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "tee/error.hpp"

namespace tee {

template <typename S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;

// Channel-major activation grid. data(c, p) holds channel c of pixel p where
// p = sample * height * width + y * width + x. batch is 1 for the single
// feature maps that flow through the inference pipeline; the trainer stacks
// samples along columns so convolutions become one GEMM per layer.
template <typename S>
struct FeatureMap {
  int channels = 0;
  int height = 0;
  int width = 0;
  int batch = 1;
  Mat<S> data;

  static FeatureMap zeros(int channels, int height, int width, int batch = 1) {
    FeatureMap m;
    m.channels = channels;
    m.height = height;
    m.width = width;
    m.batch = batch;
    m.data = Mat<S>::Zero(channels, static_cast<Eigen::Index>(batch) * height * width);
    return m;
  }

  int pixels() const { return height * width; }

  auto sample(int i) { return data.middleCols(static_cast<Eigen::Index>(i) * pixels(), pixels()); }
  auto sample(int i) const {
    return data.middleCols(static_cast<Eigen::Index>(i) * pixels(), pixels());
  }

  bool same_shape(const FeatureMap& o) const {
    return channels == o.channels && height == o.height && width == o.width &&
           batch == o.batch;
  }

  template <typename T>
  FeatureMap<T> cast() const {
    FeatureMap<T> out;
    out.channels = channels;
    out.height = height;
    out.width = width;
    out.batch = batch;
    out.data = data.template cast<T>();
    return out;
  }
};

template <typename S>
inline void require_shape(const FeatureMap<S>& m, int channels, int height,
                          int width, const std::string& what) {
  require(m.channels == channels && m.height == height && m.width == width,
          ErrorKind::shape,
          what + ": expected " + std::to_string(channels) + "x" +
              std::to_string(height) + "x" + std::to_string(width) + ", got " +
              std::to_string(m.channels) + "x" + std::to_string(m.height) +
              "x" + std::to_string(m.width));
}

// Named reference to one learnable tensor; the unit shared by the optimizer
// and the checkpoint container.
template <typename S>
struct ParamRef {
  std::string name;
  Mat<S>* value = nullptr;
};

}  // namespace tee
