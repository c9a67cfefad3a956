#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "wsod/candidates.hpp"
#include "wsod/data_model.hpp"
#include "wsod/ocud.hpp"

namespace wsod {

/// Two-branch MIL head over proposal features. Detection branch produces
/// x^d (per-proposal, per-category logits squashed by sigmoid then softmaxed
/// over proposals); classification branch produces x^c (softmaxed over
/// categories). One linear layer per branch; the interface would admit a
/// deeper head without touching the losses.
struct MilParams {
  Eigen::MatrixXd Wd, Wc;  // C x d
  Eigen::VectorXd bd, bc;  // C
  double beta = 5.0;       // detection-score softmax temperature
  double lambda = 0.2;     // guide loss weight

  int num_categories() const { return static_cast<int>(Wd.rows()); }
  int feature_dim() const { return static_cast<int>(Wd.cols()); }

  static MilParams zeros(int num_categories, int feature_dim, double beta,
                         double lambda);
};

/// All intermediate tensors of one forward pass over R proposals.
struct ScoreTensors {
  Eigen::MatrixXd sd;       // R x C, sigmoid(x^d), each entry in (0,1)
  Eigen::MatrixXd sigma_d;  // R x C, columns sum to 1
  Eigen::MatrixXd sigma_c;  // R x C, rows sum to 1
  Eigen::MatrixXd s;        // R x C, sigma_d .* sigma_c
  Eigen::VectorXd yhat;     // C, column sums of s
};

/// Forward pass; throws when R == 0 (callers skip proposal-less images).
ScoreTensors mil_forward(const MilParams& p, const Eigen::MatrixXd& features);

struct MilLoss {
  double total = 0.0;  // wsddn + lambda * guide
  double wsddn = 0.0;  // image-level binary classification loss
  double guide = 0.0;  // mean squared gap between max-category sd and objectness
};

/// y is a {0,1} vector of length C; objectness has length R. yhat is clamped
/// to [1e-7, 1 - 1e-7] before the logs.
MilLoss mil_loss(const MilParams& p, const Eigen::MatrixXd& features,
                 const Eigen::VectorXd& y, const Eigen::VectorXd& objectness);

struct MilGrad {
  Eigen::MatrixXd Wd, Wc;
  Eigen::VectorXd bd, bc;
};

/// Exact gradient of the total loss, including the softmax-over-proposals
/// coupling. The max over categories in the guide loss breaks ties toward
/// the lowest category index; the yhat clamp zeroes the classification path.
MilGrad mil_grad(const MilParams& p, const Eigen::MatrixXd& features,
                 const Eigen::VectorXd& y, const Eigen::VectorXd& objectness);

struct MilTrainConfig {
  int steps = 2000;
  double lr = 0.5;
  double lr_drop_at = 0.7;
  int num_categories = 0;  // required for scratch init
  double beta = 5.0;
  double lambda = 0.2;
  std::optional<MilParams> warm_start;
  std::uint64_t seed = 0;
  ProposalConfig proposals;
};

/// Per-image SGD over proposals from detect_objectness. Images without
/// proposals or labels are skipped (counted in the trace); no trainable image
/// is an error. Deterministic given the seed; steps == 0 under warm start is
/// the identity.
MilParams train_mil(const std::vector<ImageView>& target_images, const OcudParams& ocud,
                    const CandidateSource& source, const MilTrainConfig& cfg,
                    TrainTrace* trace = nullptr);

/// out_ij = eta * s_ij + (1 - eta) * objectness_i.
Eigen::MatrixXd fuse_scores(const Eigen::MatrixXd& s, const Eigen::VectorXd& objectness,
                            double eta);

struct DetectConfig {
  double eta = 0.5;
  double nms_iou = 0.4;
  bool per_category_nms = true;
  bool fuse_before_nms = true;  // false: NMS ranks by raw MIL scores instead
  ProposalConfig proposals;
};

/// The target-domain detector: proposals -> MIL forward -> score fusion ->
/// NMS. Detection category is the MIL column index; score is the fused score.
std::vector<Detection> detect_target(const MilParams& mil, const OcudParams& ocud,
                                     const ImageView& view, const CandidateSource& source,
                                     const DetectConfig& cfg);

void save_mil_params(const MilParams& p, double eta, const std::string& path);
struct MilCheckpoint {
  MilParams params;
  double eta = 0.5;
};
MilCheckpoint load_mil_params(const std::string& path);

}  // namespace wsod
