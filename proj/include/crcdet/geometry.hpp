#pragma once

#include <array>
#include <compare>
#include <span>
#include <vector>

namespace crcdet {

using Vec3 = std::array<double, 3>;

/// Axis-aligned box in millimetre world coordinates, stored as min/max corners.
struct Box3 {
  Vec3 min_corner{0.0, 0.0, 0.0};
  Vec3 max_corner{0.0, 0.0, 0.0};

  /// Builds a box from two arbitrary corners, ordering each axis.
  static Box3 from_corners(const Vec3& a, const Vec3& b);

  /// Box from the six-value wire layout [x1, y1, z1, x2, y2, z2], normalized per axis.
  static Box3 from_array(const std::array<double, 6>& c);
  std::array<double, 6> to_array() const;

  bool valid() const;
  Box3 translated(const Vec3& offset) const;

  friend auto operator<=>(const Box3&, const Box3&) = default;
  friend bool operator==(const Box3&, const Box3&) = default;
};

struct CandidateBox {
  Box3 box;
  double confidence = 0.0;

  friend bool operator==(const CandidateBox&, const CandidateBox&) = default;
};

double volume(const Box3& b);

/// Volume of the overlap region, 0 when the boxes are disjoint or only touch.
double intersection_volume(const Box3& a, const Box3& b);

/// Intersection over union. Any zero-volume operand yields 0.
double iou(const Box3& a, const Box3& b);

/// Strict weak order used wherever boxes must be ordered deterministically:
/// descending confidence, then lexicographic min corner, then max corner.
bool ranks_before(const CandidateBox& a, const CandidateBox& b);

inline constexpr double kDefaultNmsThreshold = 0.22;

/// Greedy hard non-maximum suppression. Keeps the best remaining box and drops
/// every remaining box whose IoU with it exceeds `iou_threshold`. The result is
/// ordered by `ranks_before`.
std::vector<CandidateBox> nms_filter(std::span<const CandidateBox> boxes,
                                     double iou_threshold = kDefaultNmsThreshold);

}  // namespace crcdet
