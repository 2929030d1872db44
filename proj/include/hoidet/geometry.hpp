#pragma once

#include <algorithm>
#include <array>
#include <compare>

namespace hoidet {

/// Axis-aligned rectangle in continuous image coordinates.
///
/// Half-open convention: pixel (row i, column j) lies inside the box iff
/// x1 <= j < x2 and y1 <= i < y2. A valid box has strictly positive area.
struct BBox {
  double x1 = 0.0;
  double y1 = 0.0;
  double x2 = 0.0;
  double y2 = 0.0;

  [[nodiscard]] double width() const { return x2 - x1; }
  [[nodiscard]] double height() const { return y2 - y1; }
  [[nodiscard]] double area() const { return width() * height(); }
  [[nodiscard]] double center_x() const { return 0.5 * (x1 + x2); }
  [[nodiscard]] double center_y() const { return 0.5 * (y1 + y2); }
  [[nodiscard]] bool is_valid() const;

  [[nodiscard]] std::array<double, 4> coords() const { return {x1, y1, x2, y2}; }
  [[nodiscard]] BBox translated(double dx, double dy) const {
    return {x1 + dx, y1 + dy, x2 + dx, y2 + dy};
  }
  [[nodiscard]] bool contains(const BBox& other) const {
    return x1 <= other.x1 && y1 <= other.y1 && other.x2 <= x2 && other.y2 <= y2;
  }

  friend bool operator==(const BBox&, const BBox&) = default;
  friend auto operator<=>(const BBox&, const BBox&) = default;
};

/// Intersection over union; 0 for disjoint boxes.
[[nodiscard]] double iou(const BBox& a, const BBox& b);

/// Tightest window enclosing both boxes.
[[nodiscard]] BBox attention_window(const BBox& a, const BBox& b);

/// Intersection with [0,width] x [0,height]. May return a degenerate box.
[[nodiscard]] BBox clip_to_image(const BBox& box, double width, double height);

/// min(IoU_h, IoU_o) of a human-object pair against another pair.
[[nodiscard]] inline double pair_min_iou(const BBox& human_a, const BBox& object_a,
                                         const BBox& human_b, const BBox& object_b) {
  return std::min(iou(human_a, human_b), iou(object_a, object_b));
}

}  // namespace hoidet
