#include "wsod/geometry.hpp"

#include <numeric>

namespace wsod {

std::vector<std::size_t> nms_indices(std::span<const BBox> boxes,
                                     std::span<const double> scores,
                                     std::span<const int> categories,
                                     double iou_thresh) {
  if (boxes.size() != scores.size() ||
      (!categories.empty() && categories.size() != boxes.size())) {
    throw ValidationError("nms: boxes, scores and categories sizes disagree");
  }
  if (!(iou_thresh >= 0.0 && iou_thresh <= 1.0)) {
    throw ValidationError("nms: iou_thresh must be in [0, 1]");
  }

  std::vector<std::size_t> order(boxes.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] > scores[b];
  });

  std::vector<std::size_t> kept;
  kept.reserve(order.size());
  for (std::size_t idx : order) {
    bool keep = true;
    for (std::size_t k : kept) {
      if (!categories.empty() && categories[k] != categories[idx]) continue;
      if (iou(boxes[idx], boxes[k]) > iou_thresh) {
        keep = false;
        break;
      }
    }
    if (keep) kept.push_back(idx);
  }
  return kept;
}

std::vector<Detection> nms(const std::vector<Detection>& dets, double iou_thresh,
                           NmsMode mode) {
  std::vector<BBox> boxes;
  std::vector<double> scores;
  std::vector<int> cats;
  boxes.reserve(dets.size());
  scores.reserve(dets.size());
  for (const auto& d : dets) {
    boxes.push_back(d.bbox);
    scores.push_back(d.score);
  }
  if (mode == NmsMode::per_category) {
    cats.reserve(dets.size());
    for (const auto& d : dets) cats.push_back(d.category);
  }
  const auto kept = nms_indices(boxes, scores, cats, iou_thresh);
  std::vector<Detection> out;
  out.reserve(kept.size());
  for (std::size_t i : kept) out.push_back(dets[i]);
  return out;
}

}  // namespace wsod
