#include "tee/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "tee/error.hpp"

namespace tee {

bool is_valid(const BoundingBox& b) {
  return std::isfinite(b.x0) && std::isfinite(b.y0) && std::isfinite(b.x1) &&
         std::isfinite(b.y1) && b.x1 > b.x0 && b.y1 > b.y0;
}

void require_valid(const BoundingBox& b) {
  require(is_valid(b), ErrorKind::invalid_geometry,
          "degenerate bounding box [" + std::to_string(b.x0) + ", " +
              std::to_string(b.y0) + ", " + std::to_string(b.x1) + ", " +
              std::to_string(b.y1) + "]");
}

double MotionField::max_motion() const {
  double m = 0.0;
  for (const auto& [id, v] : entries) m = std::max(m, v);
  return m;
}

double iou(const BoundingBox& a, const BoundingBox& b) {
  require_valid(a);
  require_valid(b);
  const double ix0 = std::max(a.x0, b.x0);
  const double iy0 = std::max(a.y0, b.y0);
  const double ix1 = std::min(a.x1, b.x1);
  const double iy1 = std::min(a.y1, b.y1);
  const double iw = ix1 - ix0;
  const double ih = iy1 - iy0;
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  return inter / (a.area() + b.area() - inter);
}

double rasterized_iou(const BoundingBox& a, const BoundingBox& b,
                      double pitch) {
  require_valid(a);
  require_valid(b);
  require(pitch > 0.0, ErrorKind::domain, "pitch must be positive");
  const double x0 = std::min(a.x0, b.x0);
  const double y0 = std::min(a.y0, b.y0);
  const double x1 = std::max(a.x1, b.x1);
  const double y1 = std::max(a.y1, b.y1);
  const long nx = static_cast<long>(std::ceil((x1 - x0) / pitch));
  const long ny = static_cast<long>(std::ceil((y1 - y0) / pitch));
  auto inside = [](const BoundingBox& box, double x, double y) {
    return x > box.x0 && x < box.x1 && y > box.y0 && y < box.y1;
  };
  long in_inter = 0;
  long in_union = 0;
  for (long iy = 0; iy < ny; ++iy) {
    const double cy = y0 + (static_cast<double>(iy) + 0.5) * pitch;
    for (long ix = 0; ix < nx; ++ix) {
      const double cx = x0 + (static_cast<double>(ix) + 0.5) * pitch;
      const bool in_a = inside(a, cx, cy);
      const bool in_b = inside(b, cx, cy);
      in_inter += (in_a && in_b) ? 1 : 0;
      in_union += (in_a || in_b) ? 1 : 0;
    }
  }
  if (in_union == 0) return 0.0;
  return static_cast<double>(in_inter) / static_cast<double>(in_union);
}

MotionField motion_field(const std::vector<ObjectAnnotation>& objs_i,
                         const std::vector<ObjectAnnotation>& objs_j) {
  auto index = [](const std::vector<ObjectAnnotation>& objs) {
    std::map<std::string, const ObjectAnnotation*> by_id;
    for (const auto& o : objs) {
      require(by_id.emplace(o.object_id, &o).second, ErrorKind::domain,
              "duplicate object_id within a frame: " + o.object_id);
    }
    return by_id;
  };
  const auto left = index(objs_i);
  const auto right = index(objs_j);

  MotionField field;
  for (const auto& [id, obj] : left) {
    auto it = right.find(id);
    if (it == right.end()) {
      field.entries[id] = 1.0;  // appears only in the first frame
    } else {
      field.entries[id] = 1.0 - iou(obj->box, it->second->box);
    }
  }
  for (const auto& [id, obj] : right) {
    if (left.find(id) == left.end()) field.entries[id] = 1.0;
  }
  return field;
}

SceneryLabel scenery_change(const std::vector<ObjectAnnotation>& objs_i,
                            const std::vector<ObjectAnnotation>& objs_j,
                            double tau_var) {
  require(tau_var >= 0.0 && tau_var <= 1.0, ErrorKind::domain,
          "tau_var must lie in [0,1]");
  const MotionField field = motion_field(objs_i, objs_j);
  return field.max_motion() > tau_var ? SceneryLabel::changed
                                      : SceneryLabel::unchanged;
}

}  // namespace tee
