#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "wsod/error.hpp"

namespace wsod {

/// Axis-aligned box over real coordinates, strictly positive extent.
/// Degenerate or non-finite boxes are rejected at construction and never
/// silently clamped.
template <class Scalar>
struct BBoxT {
  Scalar x1, y1, x2, y2;

  BBoxT(Scalar x1_in, Scalar y1_in, Scalar x2_in, Scalar y2_in)
      : x1(x1_in), y1(y1_in), x2(x2_in), y2(y2_in) {
    if (!(std::isfinite(x1) && std::isfinite(y1) && std::isfinite(x2) &&
          std::isfinite(y2)) ||
        !(x1 < x2) || !(y1 < y2)) {
      throw ValidationError("invalid bbox [" + std::to_string(x1) + ", " +
                            std::to_string(y1) + ", " + std::to_string(x2) +
                            ", " + std::to_string(y2) +
                            "]: corners must be finite with x1 < x2, y1 < y2");
    }
  }

  Scalar width() const { return x2 - x1; }
  Scalar height() const { return y2 - y1; }

  friend bool operator==(const BBoxT&, const BBoxT&) = default;
};

using BBox = BBoxT<double>;

template <class S>
S area(const BBoxT<S>& b) {
  return (b.x2 - b.x1) * (b.y2 - b.y1);
}

template <class S>
S intersection_area(const BBoxT<S>& a, const BBoxT<S>& b) {
  const S w = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const S h = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  if (w <= S(0) || h <= S(0)) return S(0);
  return w * h;
}

/// Intersection over union; 0 for disjoint boxes, 1 for identical ones.
template <class S>
S iou(const BBoxT<S>& a, const BBoxT<S>& b) {
  const S inter = intersection_area(a, b);
  return inter / (area(a) + area(b) - inter);
}

/// Max over `gts` of intersection(p, g) / area(p). 0 for empty `gts`.
/// Unlike IoU this is 1 whenever p lies inside some gt box.
template <class S>
S overlap_over_pred(const BBoxT<S>& p, std::span<const BBoxT<S>> gts) {
  const S a = area(p);
  S best = S(0);
  for (const auto& g : gts) best = std::max(best, intersection_area(p, g) / a);
  return best;
}

struct Detection {
  BBox bbox;
  int category;
  double score;

  friend bool operator==(const Detection&, const Detection&) = default;
};

enum class NmsMode { category_agnostic, per_category };

/// Greedy non-maximum suppression over parallel arrays.
/// A box is kept iff its IoU with every already-kept box (same category only,
/// when `categories` is non-empty) is <= iou_thresh. Candidates are visited by
/// (score desc, insertion index asc), so ties are deterministic. Returns kept
/// indices in visit order.
std::vector<std::size_t> nms_indices(std::span<const BBox> boxes,
                                     std::span<const double> scores,
                                     std::span<const int> categories,
                                     double iou_thresh);

std::vector<Detection> nms(const std::vector<Detection>& dets, double iou_thresh,
                           NmsMode mode);

}  // namespace wsod
