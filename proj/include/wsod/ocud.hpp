#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "wsod/candidates.hpp"
#include "wsod/data_model.hpp"

namespace wsod {

/// One-class universal detector: a linear objectness scorer over candidate
/// features. All categories are one generic "object" class; the training path
/// never reads annotation categories.
struct OcudParams {
  Eigen::VectorXd w;
  double b = 0.0;
};

struct OcudTrainConfig {
  int steps = 3000;
  double lr = 0.5;
  double lr_drop_at = 0.7;  // lr * 0.1 after this fraction of steps
  double match_iou = 0.5;   // candidate is positive iff max IoU to an annotation >= this
  double neg_pos_ratio = 3.0;
  std::optional<OcudParams> warm_start;  // absent = scratch (zeros)
  std::uint64_t seed = 0;
};

/// Full-data loss at epoch boundaries plus bookkeeping from a training run.
struct TrainTrace {
  std::vector<double> epoch_loss;
  int skipped_images = 0;
};

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// sigmoid(w . f + b); throws on dimension mismatch.
double ocud_score(const OcudParams& p, const Eigen::VectorXd& feature);

/// Logistic-loss SGD, one image per step, negatives subsampled per image to
/// neg_pos_ratio * positives (all negatives when an image has no positive).
/// Deterministic given the seed; steps == 0 returns the init unchanged.
OcudParams train_ocud(const std::vector<ImageView>& images, const CandidateSource& source,
                      const OcudTrainConfig& cfg, TrainTrace* trace = nullptr);

struct Proposal {
  BBox box;
  double objectness = 0.0;
  Eigen::VectorXd feature;
};

struct ProposalConfig {
  double nms_iou = 0.4;
  int max_proposals = 20;
};

/// Scores every candidate, applies category-agnostic NMS, keeps the top
/// max_proposals by objectness, sorted descending.
std::vector<Proposal> detect_objectness(const OcudParams& p, const ImageView& view,
                                        const CandidateSource& source,
                                        const ProposalConfig& cfg);

void save_ocud_params(const OcudParams& p, const std::string& path);
OcudParams load_ocud_params(const std::string& path);

}  // namespace wsod
