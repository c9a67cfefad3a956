#pragma once

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "wsod/geometry.hpp"

namespace wsod {

enum class Origin { original, pseudo };
enum class Domain { source, target };
enum class Split { source_train, target_train, target_test };

std::string_view to_string(Origin o);
std::string_view to_string(Domain d);
std::string_view to_string(Split s);
Origin origin_from_string(std::string_view s);
Domain domain_from_string(std::string_view s);
Split split_from_string(std::string_view s);

/// Box-level annotation. Pseudo annotations keep the mining score for audit;
/// downstream training weighs all annotations equally.
struct Annotation {
  BBox bbox;
  int category = 0;
  Origin origin = Origin::original;
  std::optional<double> score;  // present iff origin == pseudo

  friend bool operator==(const Annotation&, const Annotation&) = default;
};

struct ImageRecord {
  std::string id;
  Domain domain = Domain::source;
  double width = 0, height = 0;
  std::vector<int> labels;              // image-level labels (target train)
  std::vector<Annotation> annotations;  // training-visible boxes
  std::vector<Annotation> hidden_gt;    // simulator truth, evaluation only

  friend bool operator==(const ImageRecord&, const ImageRecord&) = default;
};

struct Dataset {
  std::vector<std::string> categories;
  Split split = Split::source_train;
  std::vector<ImageRecord> images;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

/// Training-side projection of an ImageRecord: everything except hidden_gt.
/// Detector/MIL/mining code operates on these, so the hidden ground truth is
/// unreachable from the training pathway by construction. Spans point into
/// the owning record, which must outlive the view.
struct ImageView {
  std::string id;
  Domain domain = Domain::source;
  double width = 0, height = 0;
  std::span<const int> labels;
  std::span<const Annotation> annotations;
};

ImageView training_view(const ImageRecord& img);
std::vector<ImageView> training_views(const Dataset& ds);

/// A target-domain detector: view in, scored per-category boxes out.
using DetectorFn = std::function<std::vector<Detection>(const ImageView&)>;

/// Checks all dataset invariants; throws ValidationError naming the offending
/// image id.
void validate_dataset(const Dataset& ds);

Dataset load_dataset(const std::string& path);
void save_dataset(const Dataset& ds, const std::string& path);
std::string dataset_to_json_string(const Dataset& ds);

/// Per-image detections keyed by image id. The file format is a flat array of
/// {image_id, bbox, category, score} entries.
using DetectionMap = std::map<std::string, std::vector<Detection>>;

DetectionMap load_detections(const std::string& path);
void save_detections(const DetectionMap& dets, const std::string& path);

using MinedMap = std::map<std::string, std::vector<Annotation>>;

/// Returns a new dataset whose annotations are original ∪ mined; every mined
/// entry is stored with origin = pseudo. Unknown image ids are errors.
Dataset augment(const Dataset& ds, const MinedMap& mined);

void save_mined(const MinedMap& mined, const std::string& path);

}  // namespace wsod
