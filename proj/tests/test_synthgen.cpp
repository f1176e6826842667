#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "tee/error.hpp"
#include "tee/image_io.hpp"
#include "tee/jsonio.hpp"
#include "tee/synthgen.hpp"

using namespace tee;
namespace fs = std::filesystem;

namespace {

SceneConfig basic_scene() {
  SceneConfig c;
  c.video_id = "unit";
  c.width = 64;
  c.height = 64;
  c.num_frames = 12;
  c.seed = 99;
  ObjectSpec obj;
  obj.object_id = "obj0";
  obj.class_id = 0;
  obj.color = {0.9f, 0.3f, 0.1f};
  obj.box = BoundingBox{4, 8, 20, 24};
  obj.motion.push_back(MotionSegment{0, 10, 2.0, 0.0});
  c.objects.push_back(obj);
  return c;
}

fs::path temp_dir(const std::string& tag) {
  const fs::path dir = fs::temp_directory_path() / ("teedet_test_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("static scene produces pixel-identical frames") {
  SceneConfig c = basic_scene();
  c.objects[0].motion.clear();
  c.noise_sigma = 0.0f;
  const auto video = generate_video(c);
  for (size_t i = 1; i < video.frames.size(); ++i)
    CHECK(video.frames[i].image.data == video.frames[0].image.data);
}

TEST_CASE("generation is deterministic under a fixed seed") {
  SceneConfig c = basic_scene();
  c.noise_sigma = 0.05f;
  const auto a = generate_video(c);
  const auto b = generate_video(c);
  REQUIRE(a.frames.size() == b.frames.size());
  for (size_t i = 0; i < a.frames.size(); ++i)
    CHECK(a.frames[i].image.data == b.frames[i].image.data);
}

TEST_CASE("kinematics are exact: 2 px/frame over 10 frames moves x0 by 20") {
  const SceneConfig c = basic_scene();
  const auto video = generate_video(c);
  const auto& first = video.frames[0].annotations[0].box;
  const auto& last = video.frames[10].annotations[0].box;
  CHECK(last.x0 - first.x0 == doctest::Approx(20.0));
  CHECK(last.y0 == doctest::Approx(first.y0));
  // velocity stops at frame 10
  const auto& after = video.frames[11].annotations[0].box;
  CHECK(after.x0 == doctest::Approx(last.x0));
}

TEST_CASE("noise does not alter annotations") {
  SceneConfig quiet = basic_scene();
  SceneConfig noisy = basic_scene();
  noisy.noise_sigma = 0.1f;
  const auto a = generate_video(quiet);
  const auto b = generate_video(noisy);
  for (size_t i = 0; i < a.frames.size(); ++i) {
    REQUIRE(a.frames[i].annotations.size() == b.frames[i].annotations.size());
    for (size_t k = 0; k < a.frames[i].annotations.size(); ++k) {
      CHECK(a.frames[i].annotations[k].box.x0 == b.frames[i].annotations[k].box.x0);
      CHECK(a.frames[i].annotations[k].box.y1 == b.frames[i].annotations[k].box.y1);
    }
  }
}

TEST_CASE("painted pixels stay inside the annotated box") {
  SceneConfig c = basic_scene();
  c.background.intensity = {0.0f, 0.0f, 0.0f};
  c.objects[0].shape = ObjectShape::ellipse;
  c.objects[0].texture_amplitude = 0.1f;
  const auto video = generate_video(c);
  for (const auto& frame : video.frames) {
    const auto& box = frame.annotations[0].box;
    for (int y = 0; y < frame.image.height; ++y)
      for (int x = 0; x < frame.image.width; ++x) {
        const Eigen::Index p = static_cast<Eigen::Index>(y) * frame.image.width + x;
        if (frame.image.data(0, p) > 0.0f) {
          CHECK(x + 1.0 >= box.x0 - 1.0);
          CHECK(x + 0.0 <= box.x1 + 1.0);
          CHECK(y + 1.0 >= box.y0 - 1.0);
          CHECK(y + 0.0 <= box.y1 + 1.0);
        }
      }
  }
}

TEST_CASE("motion schedule that exits the canvas is a config error") {
  SceneConfig c = basic_scene();
  c.objects[0].motion[0] = MotionSegment{0, 10, 10.0, 0.0};
  CHECK_THROWS_AS(generate_video(c), Error);
}

TEST_CASE("label_pairs marks static and teleporting pairs") {
  SUBCASE("static video yields only unchanged labels") {
    SceneConfig c = basic_scene();
    c.objects[0].motion.clear();
    const auto video = generate_video(c);
    for (const auto& p : label_pairs(video, 3, 0.4)) {
      CHECK(p.label == SceneryLabel::unchanged);
      CHECK(p.max_mfi == doctest::Approx(0.0));
    }
  }
  SUBCASE("teleport to a disjoint location gives max_mfi 1 and changed") {
    SceneConfig c = basic_scene();
    c.objects[0].motion.clear();
    c.objects[0].motion.push_back(MotionSegment{5, 6, 30.0, 30.0});
    const auto video = generate_video(c);
    const auto pairs = label_pairs(video, 1, 0.4);
    const auto& jump = pairs[5];
    CHECK(jump.max_mfi == doctest::Approx(1.0));
    CHECK(jump.label == SceneryLabel::changed);
    CHECK(pairs[0].label == SceneryLabel::unchanged);
  }
  SUBCASE("interval >= video length gives an empty list") {
    const auto video = generate_video(basic_scene());
    CHECK(label_pairs(video, 12, 0.4).empty());
    CHECK(label_pairs(video, 40, 0.4).empty());
  }
}

TEST_CASE("dataset round trip preserves images and annotations") {
  SceneConfig c = basic_scene();
  c.noise_sigma = 0.03f;
  c.background.flicker = true;
  c.background.flicker_amplitude = 0.05f;
  c.background.flicker_region = BoundingBox{40, 40, 60, 60};
  const auto video = generate_video(c);
  const fs::path dir = temp_dir("roundtrip");
  write_dataset(video, dir);
  const auto loaded = read_dataset(dir);
  REQUIRE(loaded.frames.size() == video.frames.size());
  CHECK(loaded.video_id == video.video_id);
  for (size_t i = 0; i < video.frames.size(); ++i) {
    CHECK(loaded.frames[i].image.data == video.frames[i].image.data);
    REQUIRE(loaded.frames[i].annotations.size() == video.frames[i].annotations.size());
    for (size_t k = 0; k < video.frames[i].annotations.size(); ++k) {
      // doubles survive the JSON round trip bit-exactly
      CHECK(loaded.frames[i].annotations[k].box.x0 == video.frames[i].annotations[k].box.x0);
      CHECK(loaded.frames[i].annotations[k].box.x1 == video.frames[i].annotations[k].box.x1);
      CHECK(loaded.frames[i].annotations[k].object_id == video.frames[i].annotations[k].object_id);
    }
  }
  fs::remove_all(dir);
}

TEST_CASE("written datasets are byte-identical across runs") {
  const SceneConfig c = basic_scene();
  const fs::path d1 = temp_dir("det1");
  const fs::path d2 = temp_dir("det2");
  write_dataset(generate_video(c), d1);
  write_dataset(generate_video(c), d2);
  CHECK(file_hash_hex(d1 / "annotations.json") == file_hash_hex(d2 / "annotations.json"));
  CHECK(file_hash_hex(d1 / "frames" / "000000.png") == file_hash_hex(d2 / "frames" / "000000.png"));
  CHECK(file_hash_hex(d1 / "frames" / "000005.png") == file_hash_hex(d2 / "frames" / "000005.png"));
  fs::remove_all(d1);
  fs::remove_all(d2);
}

TEST_CASE("annotation file missing a frame entry is a schema error") {
  const auto video = generate_video(basic_scene());
  const fs::path dir = temp_dir("missing");
  write_dataset(video, dir);
  Json root = read_json_file(dir / "annotations.json");
  root["frames"].erase(3);
  write_json_file(dir / "annotations.json", root);
  CHECK_THROWS_AS(read_dataset(dir), Error);
  fs::remove_all(dir);
}

TEST_CASE("hand-authored two-frame dataset parses to the written numbers") {
  const fs::path dir = temp_dir("hand");
  fs::create_directories(dir / "frames");
  // two gray frames
  FeatureMap<float> img = FeatureMap<float>::zeros(3, 8, 8);
  img.data.setConstant(0.5f);
  quantize_image(img);
  write_png(dir / "frames" / "000000.png", img);
  write_png(dir / "frames" / "000001.png", img);
  std::ofstream out(dir / "annotations.json");
  out << R"({
  "video_id": "hand",
  "width": 8,
  "height": 8,
  "frames": [
    {"frame": 0, "objects": [{"object_id": "a", "class_id": 2, "bbox": [1.0, 2.0, 5.5, 6.25]}]},
    {"frame": 1, "objects": []}
  ]
})";
  out.close();
  const auto video = read_dataset(dir);
  REQUIRE(video.frames.size() == 2);
  REQUIRE(video.frames[0].annotations.size() == 1);
  const auto& obj = video.frames[0].annotations[0];
  CHECK(obj.object_id == "a");
  CHECK(obj.class_id == 2);
  CHECK(obj.box.x0 == 1.0);
  CHECK(obj.box.y0 == 2.0);
  CHECK(obj.box.x1 == 5.5);
  CHECK(obj.box.y1 == 6.25);
  fs::remove_all(dir);
}

TEST_CASE("scene config JSON round trip") {
  SceneConfig c = basic_scene();
  c.background.flicker = true;
  c.background.flicker_amplitude = 0.1f;
  c.background.flicker_region = BoundingBox{10, 10, 30, 30};
  const std::string text = scene_config_to_json_text(c);
  const SceneConfig back = scene_config_from_json_text(text);
  CHECK(back.video_id == c.video_id);
  CHECK(back.objects.size() == 1);
  CHECK(back.objects[0].motion.size() == 1);
  CHECK(back.objects[0].motion[0].vx == 2.0);
  CHECK(back.background.flicker);
  CHECK(scene_config_to_json_text(back) == text);
}

TEST_CASE("unknown scene config keys are rejected") {
  CHECK_THROWS_AS(scene_config_from_json_text(R"({"video_id": "x", "bogus": 1})"), Error);
}
