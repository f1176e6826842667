#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "tee/tensor.hpp"

namespace tee {

// Images are 3-channel FeatureMaps with intensities in [0,1]. On disk they are
// 8-bit RGB PNG; quantize/dequantize define the exact correspondence.
inline uint8_t quantize_u8(float v) {
  const float c = std::min(1.0f, std::max(0.0f, v));
  return static_cast<uint8_t>(std::lround(c * 255.0f));
}

inline float dequantize_u8(uint8_t v) { return static_cast<float>(v) / 255.0f; }

// Snaps every intensity onto the 8-bit grid so that written files decode to
// bit-identical images.
void quantize_image(FeatureMap<float>& image);

void write_png(const std::filesystem::path& path, const FeatureMap<float>& image);
FeatureMap<float> read_png(const std::filesystem::path& path);

}  // namespace tee
