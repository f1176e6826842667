#pragma once

#include <map>
#include <string>
#include <vector>

namespace tee {

// Axis-aligned box, continuous pixel coordinates, origin top-left.
// Valid boxes have x1 > x0 and y1 > y0; degenerate boxes are rejected by
// require_valid rather than being given an IoU convention.
struct BoundingBox {
  double x0 = 0.0;
  double y0 = 0.0;
  double x1 = 0.0;
  double y1 = 0.0;

  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
  double area() const { return width() * height(); }
};

bool is_valid(const BoundingBox& b);
void require_valid(const BoundingBox& b);

struct ObjectAnnotation {
  std::string object_id;  // stable identity across frames
  int class_id = 0;
  BoundingBox box;
};

enum class SceneryLabel : int { unchanged = 0, changed = 1 };

// Per-object motion values in [0,1], keyed by object id. The key set is the
// union of the ids present in the two compared frames.
struct MotionField {
  std::map<std::string, double> entries;

  // max over entries; 0 for an empty field (no objects in either frame).
  double max_motion() const;
};

// area(a ∩ b) / area(a ∪ b); symmetric; 0 for disjoint boxes.
double iou(const BoundingBox& a, const BoundingBox& b);

// Test oracle companion to iou(): counts grid cells whose centers fall inside
// each box, over the union's bounding rectangle at the given pitch.
double rasterized_iou(const BoundingBox& a, const BoundingBox& b, double pitch);

// Motion per object id: 1 - iou for ids present in both frames, 1 otherwise.
MotionField motion_field(const std::vector<ObjectAnnotation>& objs_i,
                         const std::vector<ObjectAnnotation>& objs_j);

// changed iff max motion strictly exceeds tau_var; empty field -> unchanged.
SceneryLabel scenery_change(const std::vector<ObjectAnnotation>& objs_i,
                            const std::vector<ObjectAnnotation>& objs_j,
                            double tau_var);

}  // namespace tee
