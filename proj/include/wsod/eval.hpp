#pragma once

#include <span>
#include <string>
#include <vector>

#include "wsod/data_model.hpp"

namespace wsod {

enum class ApMethod { eleven_point, all_points };

std::string_view to_string(ApMethod m);
ApMethod ap_method_from_string(std::string_view s);

/// Average precision from a cumulative PR curve (one point per ranked
/// detection, recall non-decreasing). eleven_point averages the max precision
/// at recall >= r over r in {0, 0.1, ..., 1.0}; all_points integrates the
/// interpolated envelope. Empty input gives 0.
double voc_ap(std::span<const double> recall, std::span<const double> precision,
              ApMethod method);

struct MapResult {
  std::vector<double> per_category_ap;  // -1 marks categories without ground truth
  double map = 0.0;                     // mean over categories with ground truth
};

/// Standard greedy matching per category at IoU >= iou_thresh: detections
/// sorted by (score desc, image id, box coords); each matches the best-IoU
/// unmatched ground-truth box. Output is independent of input detection order.
MapResult evaluate_map(const DetectionMap& dets, const Dataset& gt,
                       double iou_thresh = 0.5,
                       ApMethod method = ApMethod::eleven_point);

struct CorlocResult {
  std::vector<double> per_category;  // -1 marks categories present in no image
  double mean = 0.0;
};

/// Fraction of images containing a category whose single top-scoring
/// detection of that category overlaps some same-category ground-truth box
/// with IoU strictly greater than iou_thresh.
CorlocResult evaluate_corloc(const DetectionMap& dets, const Dataset& target_train,
                             double iou_thresh = 0.5);
CorlocResult evaluate_corloc(const DetectorFn& detector, const Dataset& target_train,
                             double iou_thresh = 0.5);

}  // namespace wsod
