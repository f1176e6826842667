#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tee/geometry.hpp"
#include "tee/tensor.hpp"

namespace tee {

enum class ObjectShape { rectangle, ellipse };

// One constant-velocity span of an object's trajectory, measured in frames.
// Moving [start, end): position(t) accumulates velocity for each whole frame
// step inside the span. A one-frame span with a large velocity is a teleport.
struct MotionSegment {
  int start_frame = 0;
  int end_frame = 0;
  double vx = 0.0;  // px per frame
  double vy = 0.0;
};

struct ObjectSpec {
  std::string object_id;
  int class_id = 0;
  ObjectShape shape = ObjectShape::rectangle;
  std::array<float, 3> color{0.8f, 0.2f, 0.2f};
  float texture_amplitude = 0.0f;  // sinusoidal pattern riding on the color
  BoundingBox box;                 // position at frame 0
  std::vector<MotionSegment> motion;
};

struct BackgroundSpec {
  std::array<float, 3> intensity{0.35f, 0.4f, 0.45f};
  // Dynamic background: a region whose brightness oscillates frame to frame.
  // Nuisance variation only; never annotated.
  bool flicker = false;
  float flicker_amplitude = 0.0f;
  BoundingBox flicker_region;
  int flicker_period = 8;
};

struct SceneConfig {
  std::string video_id = "video";
  int width = 224;
  int height = 224;
  int num_frames = 16;
  float noise_sigma = 0.0f;  // per-pixel Gaussian, [0,1] intensity units
  uint64_t seed = 0;
  BackgroundSpec background;
  std::vector<ObjectSpec> objects;
};

struct FrameRecord {
  int frame_index = 0;
  FeatureMap<float> image;  // 3 x H x W, intensities on the 8-bit grid
  std::vector<ObjectAnnotation> annotations;
};

struct SyntheticVideo {
  std::string video_id;
  SceneConfig config;
  std::vector<FrameRecord> frames;
};

// Analytic object box at a frame (piecewise-linear kinematics).
BoundingBox object_box_at(const ObjectSpec& obj, int frame);

// Validates the config (objects stay inside the canvas for every scheduled
// frame, noise bounds, segment sanity).
void validate_scene(const SceneConfig& config);

// Deterministic function of (config, seed); annotations are exact.
SyntheticVideo generate_video(const SceneConfig& config);

struct LabeledPair {
  int frame_i = 0;
  int frame_j = 0;
  double max_mfi = 0.0;
  SceneryLabel label = SceneryLabel::unchanged;
};

// Ground-truth change labels for all frame pairs at a fixed interval.
std::vector<LabeledPair> label_pairs(const SyntheticVideo& video, int interval,
                                     double tau_var);

// On-disk layout: <dir>/frames/%06d.png plus <dir>/annotations.json.
void write_dataset(const SyntheticVideo& video, const std::filesystem::path& dir);
SyntheticVideo read_dataset(const std::filesystem::path& dir);

// JSON round trip for scene configs (used by the CLI corpus files).
SceneConfig scene_config_from_json_text(const std::string& text);
std::string scene_config_to_json_text(const SceneConfig& config);
SceneConfig scene_config_from_json(const nlohmann::json& j, const std::string& context);
nlohmann::json scene_config_to_json(const SceneConfig& config);

}  // namespace tee
