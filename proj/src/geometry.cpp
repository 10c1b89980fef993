#include "crcdet/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace crcdet {

Box3 Box3::from_corners(const Vec3& a, const Vec3& b) {
  Box3 out;
  for (int k = 0; k < 3; ++k) {
    out.min_corner[k] = std::min(a[k], b[k]);
    out.max_corner[k] = std::max(a[k], b[k]);
  }
  return out;
}

Box3 Box3::from_array(const std::array<double, 6>& c) {
  return from_corners({c[0], c[1], c[2]}, {c[3], c[4], c[5]});
}

std::array<double, 6> Box3::to_array() const {
  return {min_corner[0], min_corner[1], min_corner[2],
          max_corner[0], max_corner[1], max_corner[2]};
}

bool Box3::valid() const {
  for (int k = 0; k < 3; ++k) {
    if (!std::isfinite(min_corner[k]) || !std::isfinite(max_corner[k])) return false;
    if (min_corner[k] > max_corner[k]) return false;
  }
  return true;
}

Box3 Box3::translated(const Vec3& offset) const {
  Box3 out = *this;
  for (int k = 0; k < 3; ++k) {
    out.min_corner[k] += offset[k];
    out.max_corner[k] += offset[k];
  }
  return out;
}

double volume(const Box3& b) {
  return (b.max_corner[0] - b.min_corner[0]) * (b.max_corner[1] - b.min_corner[1]) *
         (b.max_corner[2] - b.min_corner[2]);
}

double intersection_volume(const Box3& a, const Box3& b) {
  double v = 1.0;
  for (int k = 0; k < 3; ++k) {
    const double lo = std::max(a.min_corner[k], b.min_corner[k]);
    const double hi = std::min(a.max_corner[k], b.max_corner[k]);
    if (hi <= lo) return 0.0;
    v *= hi - lo;
  }
  return v;
}

double iou(const Box3& a, const Box3& b) {
  const double va = volume(a);
  const double vb = volume(b);
  if (va <= 0.0 || vb <= 0.0) return 0.0;
  const double inter = intersection_volume(a, b);
  if (inter <= 0.0) return 0.0;
  const double uni = va + vb - inter;
  return std::clamp(inter / uni, 0.0, 1.0);
}

bool ranks_before(const CandidateBox& a, const CandidateBox& b) {
  if (a.confidence != b.confidence) return a.confidence > b.confidence;
  if (a.box.min_corner != b.box.min_corner) return a.box.min_corner < b.box.min_corner;
  return a.box.max_corner < b.box.max_corner;
}

std::vector<CandidateBox> nms_filter(std::span<const CandidateBox> boxes, double iou_threshold) {
  std::vector<CandidateBox> order(boxes.begin(), boxes.end());
  std::stable_sort(order.begin(), order.end(), ranks_before);

  std::vector<CandidateBox> kept;
  std::vector<bool> suppressed(order.size(), false);
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (suppressed[i]) continue;
    kept.push_back(order[i]);
    for (std::size_t j = i + 1; j < order.size(); ++j) {
      if (!suppressed[j] && iou(order[i].box, order[j].box) > iou_threshold) suppressed[j] = true;
    }
  }
  return kept;
}

}  // namespace crcdet
