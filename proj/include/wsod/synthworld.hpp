#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "wsod/candidates.hpp"
#include "wsod/data_model.hpp"

namespace wsod {

/// Generator parameters for the synthetic detection world. Each object is a
/// box plus a feature vector near its category prototype; target prototypes
/// are rotated copies of source prototypes at an exact cosine, so cross-domain
/// similarity is a dial rather than an accident.
struct WorldConfig {
  int feature_dim = 16;
  int n_source_cats = 6;
  int n_target_cats = 4;
  double prototype_affinity = 0.8;   // cosine(target prototype, paired source)
  double feature_noise_sigma = 0.08; // per-coordinate object feature noise
  // Distractor features cluster around a few fixed clutter directions, the
  // way real images repeat the same background structures.
  int n_background_prototypes = 2;
  double background_strength = 0.55;  // norm of the clutter component
  double background_sigma = 0.08;     // per-coordinate candidate feature noise
  // Context candidates: boxes enclosing an object loosely (IoU below the 0.5
  // match threshold) whose pooled feature keeps the full object evidence and
  // adds a clutter component. Image-level labels cannot tell them from the
  // object itself; box-level supervision can.
  int context_boxes_per_object = 2;
  double extra_context_box_prob = 0.4;  // chance of one more wide context window
  double context_strength = 0.52;  // clutter scale per unit of pooled background
  int objects_per_image_min = 1;
  int objects_per_image_max = 3;
  int n_source_images = 200;
  int n_target_train_images = 100;
  int n_target_test_images = 100;
  double leak_rate = 0.3;      // fraction of source images with an unannotated
                               // target-category object
  double jitter_sigma = 0.08;  // candidate corner noise, relative to box size
  int jitters_per_object = 3;
  int distractors_per_image = 16;
  double image_size = 128.0;
  std::uint64_t seed = 42;

  int total_categories() const { return n_source_cats + n_target_cats; }
  // Global id space: target categories first, then source categories.
  bool is_target_category(int c) const { return c >= 0 && c < n_target_cats; }

  void validate() const;
};

WorldConfig world_config_from_file(const std::string& path);

/// Generated datasets plus the feature model that produced them. Candidate
/// features are a pure function of (seed, image id, object index), so the
/// same image always yields the same candidates, in memory or after a
/// save/load round trip of the datasets.
class World {
 public:
  static World generate(const WorldConfig& cfg);

  /// Rebuilds the feature model over externally loaded datasets. The config
  /// must be the one the datasets were generated with.
  static World attach(const WorldConfig& cfg, Dataset source_train,
                      Dataset target_train, Dataset target_test);

  const WorldConfig& config() const { return cfg_; }
  const Dataset& source_train() const { return source_train_; }
  const Dataset& target_train() const { return target_train_; }
  const Dataset& target_test() const { return target_test_; }

  /// d x total_categories, one unit-norm column per category id.
  const Eigen::MatrixXd& prototypes() const { return prototypes_; }

  /// d x n_background_prototypes clutter directions.
  const Eigen::MatrixXd& background_prototypes() const { return bg_prototypes_; }

  /// Feature of hidden object `object_index` of `img`. Simulator/evaluation
  /// side only.
  Eigen::VectorXd object_feature(const ImageRecord& img, int object_index) const;

  /// Candidate boxes for an image: per hidden object the true box plus
  /// jittered copies, plus background distractors. Each candidate feature is
  /// alpha * nearest-object feature + (1 - alpha) * background draw, with
  /// alpha = IoU to the nearest object when that IoU >= 0.3, else 0.
  std::vector<Candidate> candidates(const ImageRecord& img) const;

  /// Candidate provider keyed by view id. Valid while this World is alive
  /// and unmoved.
  CandidateSource candidate_source() const;

  /// Deterministically keeps round(fraction * n) source images; smaller
  /// fractions are prefixes of larger ones under the same seed.
  World with_source_fraction(double fraction, std::uint64_t seed) const;

 private:
  WorldConfig cfg_;
  Eigen::MatrixXd prototypes_;
  Eigen::MatrixXd bg_prototypes_;
  Dataset source_train_, target_train_, target_test_;
};

}  // namespace wsod
