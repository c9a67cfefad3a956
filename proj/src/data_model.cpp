#include "wsod/data_model.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace wsod {

using nlohmann::json;

std::string_view to_string(Origin o) {
  return o == Origin::original ? "original" : "pseudo";
}
std::string_view to_string(Domain d) {
  return d == Domain::source ? "source" : "target";
}
std::string_view to_string(Split s) {
  switch (s) {
    case Split::source_train: return "source_train";
    case Split::target_train: return "target_train";
    default: return "target_test";
  }
}

Origin origin_from_string(std::string_view s) {
  if (s == "original") return Origin::original;
  if (s == "pseudo") return Origin::pseudo;
  throw ValidationError("unknown origin '" + std::string(s) + "'");
}
Domain domain_from_string(std::string_view s) {
  if (s == "source") return Domain::source;
  if (s == "target") return Domain::target;
  throw ValidationError("unknown domain '" + std::string(s) + "'");
}
Split split_from_string(std::string_view s) {
  if (s == "source_train") return Split::source_train;
  if (s == "target_train") return Split::target_train;
  if (s == "target_test") return Split::target_test;
  throw ValidationError("unknown split '" + std::string(s) + "'");
}

ImageView training_view(const ImageRecord& img) {
  return ImageView{img.id, img.domain, img.width, img.height,
                   std::span<const int>(img.labels),
                   std::span<const Annotation>(img.annotations)};
}

std::vector<ImageView> training_views(const Dataset& ds) {
  std::vector<ImageView> views;
  views.reserve(ds.images.size());
  for (const auto& img : ds.images) views.push_back(training_view(img));
  return views;
}

namespace {

void validate_annotation(const Annotation& a, int n_cats, double width,
                         double height, const std::string& img_id,
                         const char* where) {
  const std::string ctx = "image '" + img_id + "' " + where + ": ";
  if (a.category < 0 || a.category >= n_cats) {
    throw ValidationError(ctx + "category " + std::to_string(a.category) +
                          " out of range [0, " + std::to_string(n_cats) + ")");
  }
  if (a.bbox.x1 < 0 || a.bbox.y1 < 0 || a.bbox.x2 > width || a.bbox.y2 > height) {
    throw ValidationError(ctx + "bbox outside image bounds");
  }
  if (a.origin == Origin::pseudo) {
    if (!a.score || !(*a.score > 0.0 && *a.score <= 1.0)) {
      throw ValidationError(ctx + "pseudo annotation needs score in (0, 1]");
    }
  } else if (a.score) {
    throw ValidationError(ctx + "original annotation must not carry a score");
  }
}

}  // namespace

void validate_dataset(const Dataset& ds) {
  const int n_cats = static_cast<int>(ds.categories.size());
  std::set<std::string> seen_ids;
  for (const auto& img : ds.images) {
    if (!seen_ids.insert(img.id).second) {
      throw ValidationError("duplicate image id '" + img.id + "'");
    }
    if (!(img.width > 0) || !(img.height > 0)) {
      throw ValidationError("image '" + img.id + "': non-positive dimensions");
    }
    for (const auto& a : img.annotations) {
      validate_annotation(a, n_cats, img.width, img.height, img.id, "annotation");
    }
    for (const auto& a : img.hidden_gt) {
      validate_annotation(a, n_cats, img.width, img.height, img.id, "hidden_gt");
    }
    std::set<int> label_set(img.labels.begin(), img.labels.end());
    if (label_set.size() != img.labels.size()) {
      throw ValidationError("image '" + img.id + "': duplicate labels");
    }
    for (int l : img.labels) {
      if (l < 0 || l >= n_cats) {
        throw ValidationError("image '" + img.id + "': label " +
                              std::to_string(l) + " out of range");
      }
    }
    if (ds.split == Split::target_train && img.domain == Domain::target) {
      std::set<int> gt_cats;
      for (const auto& a : img.hidden_gt) gt_cats.insert(a.category);
      if (label_set != gt_cats) {
        throw ValidationError("image '" + img.id +
                              "': labels do not match hidden ground-truth "
                              "category set");
      }
    }
  }
}

namespace {

json bbox_to_json(const BBox& b) { return json::array({b.x1, b.y1, b.x2, b.y2}); }

BBox bbox_from_json(const json& j, const std::string& ctx) {
  if (!j.is_array() || j.size() != 4) {
    throw ValidationError(ctx + ": bbox must be an array [x1, y1, x2, y2]");
  }
  for (const auto& v : j) {
    if (!v.is_number()) throw ValidationError(ctx + ": bbox entries must be numbers");
  }
  return BBox(j[0].get<double>(), j[1].get<double>(), j[2].get<double>(),
              j[3].get<double>());
}

json annotation_to_json(const Annotation& a) {
  json j;
  j["bbox"] = bbox_to_json(a.bbox);
  j["category"] = a.category;
  j["origin"] = std::string(to_string(a.origin));
  if (a.score) j["score"] = *a.score;
  return j;
}

Annotation annotation_from_json(const json& j, const std::string& ctx) {
  if (!j.is_object()) throw ValidationError(ctx + ": annotation must be an object");
  if (!j.contains("bbox") || !j.contains("category") || !j.contains("origin")) {
    throw ValidationError(ctx + ": annotation needs bbox, category, origin fields");
  }
  Annotation a{bbox_from_json(j.at("bbox"), ctx),
               j.at("category").get<int>(),
               origin_from_string(j.at("origin").get<std::string>()),
               std::nullopt};
  if (j.contains("score")) a.score = j.at("score").get<double>();
  return a;
}

json parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError("parse error in '" + path + "': " + e.what());
  }
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << text;
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

}  // namespace

std::string dataset_to_json_string(const Dataset& ds) {
  json j;
  j["categories"] = ds.categories;
  j["split"] = std::string(to_string(ds.split));
  json images = json::array();
  for (const auto& img : ds.images) {
    json ji;
    ji["id"] = img.id;
    ji["domain"] = std::string(to_string(img.domain));
    ji["width"] = img.width;
    ji["height"] = img.height;
    ji["labels"] = img.labels;
    json anns = json::array();
    for (const auto& a : img.annotations) anns.push_back(annotation_to_json(a));
    ji["annotations"] = std::move(anns);
    json gts = json::array();
    for (const auto& a : img.hidden_gt) gts.push_back(annotation_to_json(a));
    ji["hidden_gt"] = std::move(gts);
    images.push_back(std::move(ji));
  }
  j["images"] = std::move(images);
  return j.dump(2) + "\n";
}

void save_dataset(const Dataset& ds, const std::string& path) {
  validate_dataset(ds);
  write_file(path, dataset_to_json_string(ds));
}

Dataset load_dataset(const std::string& path) {
  const json j = parse_file(path);
  if (!j.is_object() || !j.contains("categories") || !j.contains("split") ||
      !j.contains("images")) {
    throw ValidationError("'" + path +
                          "': dataset needs categories, split, images fields");
  }
  Dataset ds;
  ds.categories = j.at("categories").get<std::vector<std::string>>();
  ds.split = split_from_string(j.at("split").get<std::string>());
  for (const auto& ji : j.at("images")) {
    const std::string id =
        ji.contains("id") ? ji.at("id").get<std::string>() : "<missing id>";
    try {
      ImageRecord img;
      img.id = id;
      img.domain = domain_from_string(ji.at("domain").get<std::string>());
      img.width = ji.at("width").get<double>();
      img.height = ji.at("height").get<double>();
      img.labels = ji.at("labels").get<std::vector<int>>();
      for (const auto& ja : ji.at("annotations")) {
        img.annotations.push_back(annotation_from_json(ja, "image '" + id + "'"));
      }
      for (const auto& ja : ji.at("hidden_gt")) {
        img.hidden_gt.push_back(annotation_from_json(ja, "image '" + id + "'"));
      }
      ds.images.push_back(std::move(img));
    } catch (const json::exception& e) {
      throw ValidationError("image '" + id + "': " + e.what());
    }
  }
  validate_dataset(ds);
  return ds;
}

DetectionMap load_detections(const std::string& path) {
  const json j = parse_file(path);
  if (!j.is_array()) {
    throw ValidationError("'" + path + "': detections file must be an array");
  }
  DetectionMap out;
  for (const auto& jd : j) {
    if (!jd.is_object() || !jd.contains("image_id") || !jd.contains("bbox") ||
        !jd.contains("category") || !jd.contains("score")) {
      throw ValidationError("'" + path +
                            "': detection needs image_id, bbox, category, score");
    }
    const std::string id = jd.at("image_id").get<std::string>();
    Detection d{bbox_from_json(jd.at("bbox"), "detection for image '" + id + "'"),
                jd.at("category").get<int>(), jd.at("score").get<double>()};
    if (d.category < 0) {
      throw ValidationError("detection for image '" + id + "': negative category");
    }
    if (!(d.score >= 0.0 && d.score <= 1.0)) {
      throw ValidationError("detection for image '" + id +
                            "': score must be in [0, 1]");
    }
    out[id].push_back(std::move(d));
  }
  return out;
}

void save_detections(const DetectionMap& dets, const std::string& path) {
  json j = json::array();
  for (const auto& [id, list] : dets) {
    for (const auto& d : list) {
      json jd;
      jd["image_id"] = id;
      jd["bbox"] = bbox_to_json(d.bbox);
      jd["category"] = d.category;
      jd["score"] = d.score;
      j.push_back(std::move(jd));
    }
  }
  write_file(path, j.dump(2) + "\n");
}

Dataset augment(const Dataset& ds, const MinedMap& mined) {
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < ds.images.size(); ++i) index[ds.images[i].id] = i;
  for (const auto& [id, anns] : mined) {
    if (!index.count(id)) {
      throw ValidationError("augment: unknown image id '" + id + "'");
    }
    for (const auto& a : anns) {
      if (!a.score || !(*a.score > 0.0 && *a.score <= 1.0)) {
        throw ValidationError("augment: mined annotation for image '" + id +
                              "' needs score in (0, 1]");
      }
    }
  }
  Dataset out = ds;
  for (const auto& [id, anns] : mined) {
    auto& img = out.images[index[id]];
    for (Annotation a : anns) {
      a.origin = Origin::pseudo;
      img.annotations.push_back(std::move(a));
    }
  }
  return out;
}

void save_mined(const MinedMap& mined, const std::string& path) {
  json j = json::array();
  for (const auto& [id, anns] : mined) {
    for (const auto& a : anns) {
      json ja;
      ja["image_id"] = id;
      ja["bbox"] = bbox_to_json(a.bbox);
      ja["category"] = a.category;
      ja["score"] = a.score ? *a.score : 0.0;
      ja["origin"] = std::string(to_string(Origin::pseudo));
      j.push_back(std::move(ja));
    }
  }
  write_file(path, j.dump(2) + "\n");
}

}  // namespace wsod
