#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "wsod/eval.hpp"
#include "wsod/mil.hpp"
#include "wsod/mining.hpp"
#include "wsod/ocud.hpp"
#include "wsod/synthworld.hpp"

namespace wsod {

/// Every knob of one progressive-transfer run. Refinement step counts default
/// to roughly 0.3x (detector) and 0.4x (MIL) of the initial budgets.
struct LoopConfig {
  int refinements = 5;  // N; 0 = one-step transfer baseline only

  double beta = 5.0;
  double lambda = 0.2;
  double eta = 0.5;
  double tau = 0.8;
  double overlap_o = 0.1;
  double nms_iou = 0.4;          // test-time NMS
  double proposal_nms_iou = 0.3; // category-agnostic proposal pruning
  int max_proposals = 20;

  int ocud_initial_steps = 3000;
  int ocud_refine_steps = 900;
  int mil_initial_steps = 2000;
  int mil_refine_steps = 800;
  double ocud_lr = 0.5;
  double mil_lr = 0.5;
  double lr_drop_at = 0.7;
  double match_iou = 0.5;
  double neg_pos_ratio = 3.0;

  bool mil_warm_start = true;
  bool fuse_before_nms = true;
  bool per_category_nms = true;
  bool source_in_refinement = true;  // false: refine the detector on T+ only
  double source_fraction = 1.0;
  ApMethod ap_method = ApMethod::eleven_point;

  std::uint64_t seed = 42;

  std::string world_config;  // path; required when running from files
  // Optional dataset overrides; when set, all three must be set.
  std::string source_dataset, target_train_dataset, target_test_dataset;

  void validate() const;
};

LoopConfig loop_config_from_file(const std::string& path);

struct MiningReport {
  double source_precision = 1.0, source_recall = 0.0;
  double target_precision = 1.0, target_recall = 0.0;
  int source_mined = 0, target_mined = 0;
};

struct IterationReport {
  int iteration = 0;
  double map = 0.0;
  std::vector<double> per_category_ap;
  double corloc = 0.0;
  std::vector<double> per_category_corloc;
  // Mean objectness over unannotated target-category objects in source
  // images; -1 when the world has none.
  double leaked_mean_objectness = -1.0;
  std::vector<double> ocud_loss, mil_loss;
  std::optional<MiningReport> mining;  // absent at iteration 0
};

struct RunReport {
  LoopConfig config;
  WorldConfig world;
  std::vector<std::uint64_t> ocud_seeds, mil_seeds;  // named rng streams per iteration
  std::vector<IterationReport> iterations;           // one entry per iteration 0..N
};

std::string report_to_json_string(const RunReport& report);
RunReport report_from_json_string(const std::string& text);
RunReport load_report(const std::string& path);
void save_report(const RunReport& report, const std::string& path);

std::string render_report_csv(const RunReport& report);
std::string render_report_md(const RunReport& report);

/// Executes the full loop: initial detector on S, initial MIL on T, then N
/// rounds of mine -> refine detector -> refine MIL, evaluating after every
/// iteration. Mining always starts from the original S and T. Fully
/// deterministic given the config.
RunReport run(const LoopConfig& cfg);
RunReport run(const LoopConfig& cfg, const World& world);

enum class AblationAxis { tau, beta, lambda, eta, source_inclusion, source_fraction };

AblationAxis ablation_axis_from_string(std::string_view s);
std::string_view to_string(AblationAxis axis);

/// One full run per value, sharing the seed and the world, differing only on
/// the chosen axis. source_inclusion treats nonzero values as true.
std::vector<RunReport> run_ablation(const LoopConfig& cfg, AblationAxis axis,
                                    const std::vector<double>& values);
std::vector<RunReport> run_ablation(const LoopConfig& cfg, const World& world,
                                    AblationAxis axis, const std::vector<double>& values);

}  // namespace wsod
