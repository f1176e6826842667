#include "tee/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>

#include "tee/error.hpp"
#include "tee/image_io.hpp"
#include "tee/jsonio.hpp"
#include "tee/rng.hpp"

namespace tee {

namespace {

constexpr double kTexturePeriod = 8.0;  // px

std::string frame_file_name(int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%06d.png", index);
  return buf;
}

void paint_object(FeatureMap<float>& image, const ObjectSpec& obj,
                  const BoundingBox& box) {
  const int x_begin = std::max(0, static_cast<int>(std::floor(box.x0)));
  const int x_end = std::min(image.width, static_cast<int>(std::ceil(box.x1)));
  const int y_begin = std::max(0, static_cast<int>(std::floor(box.y0)));
  const int y_end = std::min(image.height, static_cast<int>(std::ceil(box.y1)));
  const double cx = 0.5 * (box.x0 + box.x1);
  const double cy = 0.5 * (box.y0 + box.y1);
  const double rx = 0.5 * box.width();
  const double ry = 0.5 * box.height();
  for (int y = y_begin; y < y_end; ++y) {
    const double py = y + 0.5;
    if (py <= box.y0 || py >= box.y1) continue;
    for (int x = x_begin; x < x_end; ++x) {
      const double px = x + 0.5;
      if (px <= box.x0 || px >= box.x1) continue;
      if (obj.shape == ObjectShape::ellipse) {
        const double nx = (px - cx) / rx;
        const double ny = (py - cy) / ry;
        if (nx * nx + ny * ny > 1.0) continue;
      }
      float tex = 0.0f;
      if (obj.texture_amplitude != 0.0f) {
        // anchored to the box origin so the pattern travels with the object
        tex = obj.texture_amplitude *
              static_cast<float>(std::sin(2.0 * M_PI * (px - box.x0) / kTexturePeriod) *
                                 std::sin(2.0 * M_PI * (py - box.y0) / kTexturePeriod));
      }
      const Eigen::Index p = static_cast<Eigen::Index>(y) * image.width + x;
      for (int c = 0; c < 3; ++c) image.data(c, p) = obj.color[c] + tex;
    }
  }
}

}  // namespace

BoundingBox object_box_at(const ObjectSpec& obj, int frame) {
  double dx = 0.0;
  double dy = 0.0;
  for (const auto& seg : obj.motion) {
    const int steps = std::max(0, std::min(seg.end_frame, frame) - seg.start_frame);
    dx += seg.vx * steps;
    dy += seg.vy * steps;
  }
  return BoundingBox{obj.box.x0 + dx, obj.box.y0 + dy, obj.box.x1 + dx,
                     obj.box.y1 + dy};
}

void validate_scene(const SceneConfig& config) {
  require(config.width > 0 && config.height > 0, ErrorKind::config,
          config.video_id + ": canvas must be positive");
  require(config.num_frames >= 1, ErrorKind::config,
          config.video_id + ": need at least one frame");
  require(config.noise_sigma >= 0.0f && config.noise_sigma <= 0.2f,
          ErrorKind::config, config.video_id + ": noise_sigma outside [0, 0.2]");
  if (config.background.flicker) {
    require_valid(config.background.flicker_region);
    require(config.background.flicker_period >= 1, ErrorKind::config,
            config.video_id + ": flicker_period must be >= 1");
  }
  std::set<std::string> ids;
  for (const auto& obj : config.objects) {
    require(ids.insert(obj.object_id).second, ErrorKind::config,
            config.video_id + ": duplicate object_id " + obj.object_id);
    require_valid(obj.box);
    int prev_end = -1;
    std::vector<MotionSegment> sorted = obj.motion;
    std::sort(sorted.begin(), sorted.end(),
              [](const MotionSegment& a, const MotionSegment& b) {
                return a.start_frame < b.start_frame;
              });
    for (const auto& seg : sorted) {
      require(seg.end_frame > seg.start_frame && seg.start_frame >= 0,
              ErrorKind::config,
              config.video_id + ": bad motion segment on " + obj.object_id);
      require(seg.start_frame >= prev_end, ErrorKind::config,
              config.video_id + ": overlapping motion segments on " + obj.object_id);
      prev_end = seg.end_frame;
    }
    for (int t = 0; t < config.num_frames; ++t) {
      const BoundingBox b = object_box_at(obj, t);
      require(b.x0 >= 0.0 && b.y0 >= 0.0 && b.x1 <= config.width &&
                  b.y1 <= config.height,
              ErrorKind::config,
              config.video_id + ": object " + obj.object_id +
                  " leaves the canvas at frame " + std::to_string(t));
    }
  }
}

SyntheticVideo generate_video(const SceneConfig& config) {
  validate_scene(config);
  SyntheticVideo video;
  video.video_id = config.video_id;
  video.config = config;
  video.frames.reserve(config.num_frames);

  for (int t = 0; t < config.num_frames; ++t) {
    FrameRecord frame;
    frame.frame_index = t;
    frame.image = FeatureMap<float>::zeros(3, config.height, config.width);
    for (int c = 0; c < 3; ++c)
      frame.image.data.row(c).setConstant(config.background.intensity[c]);

    if (config.background.flicker) {
      const BoundingBox& r = config.background.flicker_region;
      const float wave = config.background.flicker_amplitude *
                         static_cast<float>(std::sin(
                             2.0 * M_PI * t / config.background.flicker_period));
      const int x_begin = std::max(0, static_cast<int>(std::floor(r.x0)));
      const int x_end = std::min(config.width, static_cast<int>(std::ceil(r.x1)));
      const int y_begin = std::max(0, static_cast<int>(std::floor(r.y0)));
      const int y_end = std::min(config.height, static_cast<int>(std::ceil(r.y1)));
      for (int y = y_begin; y < y_end; ++y)
        for (int x = x_begin; x < x_end; ++x)
          frame.image.data.col(static_cast<Eigen::Index>(y) * config.width + x)
              .array() += wave;
    }

    for (const auto& obj : config.objects) {
      const BoundingBox box = object_box_at(obj, t);
      paint_object(frame.image, obj, box);
      frame.annotations.push_back(ObjectAnnotation{obj.object_id, obj.class_id, box});
    }

    if (config.noise_sigma > 0.0f) {
      auto rng = make_rng(config.seed, static_cast<uint64_t>(t));
      std::normal_distribution<float> noise(0.0f, config.noise_sigma);
      for (Eigen::Index p = 0; p < frame.image.data.cols(); ++p)
        for (int c = 0; c < 3; ++c) frame.image.data(c, p) += noise(rng);
    }

    frame.image.data = frame.image.data.cwiseMax(0.0f).cwiseMin(1.0f);
    quantize_image(frame.image);
    video.frames.push_back(std::move(frame));
  }
  return video;
}

std::vector<LabeledPair> label_pairs(const SyntheticVideo& video, int interval,
                                     double tau_var) {
  require(interval >= 1, ErrorKind::domain, "interval must be >= 1");
  std::vector<LabeledPair> pairs;
  const int n = static_cast<int>(video.frames.size());
  for (int i = 0; i + interval < n; ++i) {
    const auto& a = video.frames[i].annotations;
    const auto& b = video.frames[i + interval].annotations;
    LabeledPair p;
    p.frame_i = i;
    p.frame_j = i + interval;
    p.max_mfi = motion_field(a, b).max_motion();
    p.label = p.max_mfi > tau_var ? SceneryLabel::changed : SceneryLabel::unchanged;
    pairs.push_back(p);
  }
  return pairs;
}

void write_dataset(const SyntheticVideo& video, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "frames");
  Json root;
  root["video_id"] = video.video_id;
  root["width"] = video.frames.empty() ? video.config.width : video.frames[0].image.width;
  root["height"] = video.frames.empty() ? video.config.height : video.frames[0].image.height;
  root["frames"] = Json::array();
  for (const auto& frame : video.frames) {
    write_png(dir / "frames" / frame_file_name(frame.frame_index), frame.image);
    Json jf;
    jf["frame"] = frame.frame_index;
    jf["objects"] = Json::array();
    for (const auto& obj : frame.annotations) {
      Json jo;
      jo["object_id"] = obj.object_id;
      jo["class_id"] = obj.class_id;
      jo["bbox"] = {obj.box.x0, obj.box.y0, obj.box.x1, obj.box.y1};
      jf["objects"].push_back(jo);
    }
    root["frames"].push_back(jf);
  }
  write_json_file(dir / "annotations.json", root);
}

SyntheticVideo read_dataset(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  const fs::path ann_path = dir / "annotations.json";
  const Json root = read_json_file(ann_path);
  const std::string ctx = ann_path.string();
  check_keys(root, {"video_id", "width", "height", "frames"}, ctx);

  SyntheticVideo video;
  video.video_id = get_required<std::string>(root, "video_id", ctx);
  const int width = get_required<int>(root, "width", ctx);
  const int height = get_required<int>(root, "height", ctx);
  video.config.video_id = video.video_id;
  video.config.width = width;
  video.config.height = height;
  require(root.contains("frames") && root.at("frames").is_array(),
          ErrorKind::schema, ctx + ": 'frames' must be an array");

  int expected = 0;
  for (const auto& jf : root.at("frames")) {
    check_keys(jf, {"frame", "objects"}, ctx);
    const int index = get_required<int>(jf, "frame", ctx);
    require(index == expected, ErrorKind::schema,
            ctx + ": frame entries must be contiguous from 0; expected " +
                std::to_string(expected) + ", found " + std::to_string(index));
    ++expected;

    FrameRecord frame;
    frame.frame_index = index;
    const fs::path png = dir / "frames" / frame_file_name(index);
    require(fs::exists(png), ErrorKind::schema, "missing frame image: " + png.string());
    frame.image = read_png(png);
    require(frame.image.width == width && frame.image.height == height,
            ErrorKind::schema, png.string() + ": image size mismatch");

    for (const auto& jo : get_required<Json>(jf, "objects", ctx)) {
      check_keys(jo, {"object_id", "class_id", "bbox"}, ctx);
      ObjectAnnotation obj;
      obj.object_id = get_required<std::string>(jo, "object_id", ctx);
      obj.class_id = get_required<int>(jo, "class_id", ctx);
      const auto bbox = get_required<std::vector<double>>(jo, "bbox", ctx);
      require(bbox.size() == 4, ErrorKind::schema, ctx + ": bbox must have 4 entries");
      obj.box = BoundingBox{bbox[0], bbox[1], bbox[2], bbox[3]};
      try {
        require_valid(obj.box);
      } catch (const Error&) {
        fail(ErrorKind::schema, ctx + ": invalid bbox for object " + obj.object_id +
                                    " at frame " + std::to_string(index));
      }
      frame.annotations.push_back(std::move(obj));
    }
    video.frames.push_back(std::move(frame));
  }
  video.config.num_frames = expected;
  return video;
}

namespace {

ObjectShape shape_from_string(const std::string& s, const std::string& ctx) {
  if (s == "rectangle") return ObjectShape::rectangle;
  if (s == "ellipse") return ObjectShape::ellipse;
  fail(ErrorKind::schema, ctx + ": unknown shape '" + s + "'");
}

BoundingBox box_from_json(const Json& j, const std::string& ctx) {
  const auto v = j.get<std::vector<double>>();
  require(v.size() == 4, ErrorKind::schema, ctx + ": box must have 4 entries");
  return BoundingBox{v[0], v[1], v[2], v[3]};
}

}  // namespace

SceneConfig scene_config_from_json(const Json& j, const std::string& ctx) {
  check_keys(j,
             {"video_id", "width", "height", "num_frames", "noise_sigma", "seed",
              "background", "objects"},
             ctx);
  SceneConfig c;
  c.video_id = get_or<std::string>(j, "video_id", c.video_id, ctx);
  c.width = get_or<int>(j, "width", c.width, ctx);
  c.height = get_or<int>(j, "height", c.height, ctx);
  c.num_frames = get_or<int>(j, "num_frames", c.num_frames, ctx);
  c.noise_sigma = get_or<float>(j, "noise_sigma", c.noise_sigma, ctx);
  c.seed = get_or<uint64_t>(j, "seed", c.seed, ctx);
  if (j.contains("background")) {
    const Json& jb = j.at("background");
    check_keys(jb, {"intensity", "flicker", "amplitude", "region", "period"}, ctx);
    auto intensity = get_or<std::vector<float>>(
        jb, "intensity",
        {c.background.intensity[0], c.background.intensity[1], c.background.intensity[2]},
        ctx);
    require(intensity.size() == 3, ErrorKind::schema, ctx + ": intensity needs 3 entries");
    std::copy(intensity.begin(), intensity.end(), c.background.intensity.begin());
    c.background.flicker = get_or<bool>(jb, "flicker", false, ctx);
    if (c.background.flicker) {
      c.background.flicker_amplitude = get_required<float>(jb, "amplitude", ctx);
      c.background.flicker_region = box_from_json(get_required<Json>(jb, "region", ctx), ctx);
      c.background.flicker_period = get_or<int>(jb, "period", 8, ctx);
    }
  }
  for (const auto& jo : get_or<Json>(j, "objects", Json::array(), ctx)) {
    check_keys(jo,
               {"object_id", "class_id", "shape", "color", "texture_amplitude",
                "box", "motion"},
               ctx);
    ObjectSpec obj;
    obj.object_id = get_required<std::string>(jo, "object_id", ctx);
    obj.class_id = get_or<int>(jo, "class_id", 0, ctx);
    obj.shape = shape_from_string(get_or<std::string>(jo, "shape", "rectangle", ctx), ctx);
    auto color = get_or<std::vector<float>>(jo, "color", {0.8f, 0.2f, 0.2f}, ctx);
    require(color.size() == 3, ErrorKind::schema, ctx + ": color needs 3 entries");
    std::copy(color.begin(), color.end(), obj.color.begin());
    obj.texture_amplitude = get_or<float>(jo, "texture_amplitude", 0.0f, ctx);
    obj.box = box_from_json(get_required<Json>(jo, "box", ctx), ctx);
    for (const auto& jm : get_or<Json>(jo, "motion", Json::array(), ctx)) {
      check_keys(jm, {"start", "end", "velocity"}, ctx);
      MotionSegment seg;
      seg.start_frame = get_required<int>(jm, "start", ctx);
      seg.end_frame = get_required<int>(jm, "end", ctx);
      const auto vel = get_required<std::vector<double>>(jm, "velocity", ctx);
      require(vel.size() == 2, ErrorKind::schema, ctx + ": velocity needs 2 entries");
      seg.vx = vel[0];
      seg.vy = vel[1];
      obj.motion.push_back(seg);
    }
    c.objects.push_back(std::move(obj));
  }
  return c;
}

Json scene_config_to_json(const SceneConfig& c) {
  Json j;
  j["video_id"] = c.video_id;
  j["width"] = c.width;
  j["height"] = c.height;
  j["num_frames"] = c.num_frames;
  j["noise_sigma"] = c.noise_sigma;
  j["seed"] = c.seed;
  Json jb;
  jb["intensity"] = {c.background.intensity[0], c.background.intensity[1],
                     c.background.intensity[2]};
  jb["flicker"] = c.background.flicker;
  if (c.background.flicker) {
    jb["amplitude"] = c.background.flicker_amplitude;
    const auto& r = c.background.flicker_region;
    jb["region"] = {r.x0, r.y0, r.x1, r.y1};
    jb["period"] = c.background.flicker_period;
  }
  j["background"] = jb;
  j["objects"] = Json::array();
  for (const auto& obj : c.objects) {
    Json jo;
    jo["object_id"] = obj.object_id;
    jo["class_id"] = obj.class_id;
    jo["shape"] = obj.shape == ObjectShape::ellipse ? "ellipse" : "rectangle";
    jo["color"] = {obj.color[0], obj.color[1], obj.color[2]};
    jo["texture_amplitude"] = obj.texture_amplitude;
    jo["box"] = {obj.box.x0, obj.box.y0, obj.box.x1, obj.box.y1};
    jo["motion"] = Json::array();
    for (const auto& seg : obj.motion) {
      Json jm;
      jm["start"] = seg.start_frame;
      jm["end"] = seg.end_frame;
      jm["velocity"] = {seg.vx, seg.vy};
      jo["motion"].push_back(jm);
    }
    j["objects"].push_back(jo);
  }
  return j;
}

SceneConfig scene_config_from_json_text(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::exception& e) {
    fail(ErrorKind::schema, std::string("scene config parse error: ") + e.what());
  }
  return scene_config_from_json(j, "scene config");
}

std::string scene_config_to_json_text(const SceneConfig& config) {
  return scene_config_to_json(config).dump(2);
}

}  // namespace tee
