#pragma once

#include <map>
#include <string>
#include <vector>

#include "wsod/data_model.hpp"

namespace wsod {

struct MiningConfig {
  double tau = 0.8;  // score threshold, strict >
  double o = 0.1;    // overlap-over-prediction threshold, strict <

  void validate() const;
};

/// Source-side mining: a detection becomes a pseudo annotation iff its score
/// exceeds tau AND its overlap-over-prediction against the image's ORIGINAL
/// annotations stays below o. Pseudo boxes never join the overlap basis, so
/// re-running on an augmented dataset gives the same result.
MinedMap mine_source(const std::vector<ImageView>& images, const DetectionMap& dets,
                     const MiningConfig& cfg);
MinedMap mine_source(const std::vector<ImageView>& images, const DetectorFn& detector,
                     const MiningConfig& cfg);

/// Target-side mining: per positive image label y, keep detections of
/// category y scoring above tau, plus every detection tied at the category's
/// max score, so each positive class yields at least one box when any
/// detection of it exists. Other categories are discarded.
MinedMap mine_target(const std::vector<ImageView>& images, const DetectionMap& dets,
                     const MiningConfig& cfg);
MinedMap mine_target(const std::vector<ImageView>& images, const DetectorFn& detector,
                     const MiningConfig& cfg);

struct MiningStats {
  double precision = 1.0;
  double recall = 0.0;
  int mined = 0;
  int matched = 0;
  int total_gt = 0;
};

/// Evaluation-side quality of mined boxes: greedy one-to-one matching by
/// descending score against same-category ground truth at the given IoU.
/// Zero mined boxes give (1.0, 0.0) by convention.
MiningStats mining_stats(const MinedMap& mined,
                         const std::map<std::string, std::vector<Annotation>>& gt,
                         double iou_thresh = 0.5);

}  // namespace wsod
