#include "wsod/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>

namespace wsod {

std::string_view to_string(ApMethod m) {
  return m == ApMethod::eleven_point ? "eleven_point" : "all_points";
}

ApMethod ap_method_from_string(std::string_view s) {
  if (s == "eleven_point") return ApMethod::eleven_point;
  if (s == "all_points") return ApMethod::all_points;
  throw ValidationError("unknown AP method '" + std::string(s) + "'");
}

double voc_ap(std::span<const double> recall, std::span<const double> precision,
              ApMethod method) {
  if (recall.size() != precision.size()) {
    throw ValidationError("voc_ap: recall/precision size mismatch");
  }
  if (recall.empty()) return 0.0;

  if (method == ApMethod::eleven_point) {
    double ap = 0.0;
    for (int k = 0; k <= 10; ++k) {
      const double r = k / 10.0;
      double pmax = 0.0;
      for (std::size_t i = 0; i < recall.size(); ++i) {
        if (recall[i] >= r) pmax = std::max(pmax, precision[i]);
      }
      ap += pmax;
    }
    return ap / 11.0;
  }

  // Exact area under the interpolated envelope.
  std::vector<double> mrec(recall.begin(), recall.end());
  std::vector<double> mpre(precision.begin(), precision.end());
  mrec.insert(mrec.begin(), 0.0);
  mrec.push_back(1.0);
  mpre.insert(mpre.begin(), 0.0);
  mpre.push_back(0.0);
  for (std::size_t i = mpre.size() - 1; i-- > 0;) {
    mpre[i] = std::max(mpre[i], mpre[i + 1]);
  }
  double ap = 0.0;
  for (std::size_t i = 0; i + 1 < mrec.size(); ++i) {
    if (mrec[i + 1] != mrec[i]) ap += (mrec[i + 1] - mrec[i]) * mpre[i + 1];
  }
  return ap;
}

namespace {

struct RankedDet {
  double score;
  std::string image_id;
  BBox box;
};

// Content-based total order so results do not depend on input ordering.
bool ranked_before(const RankedDet& a, const RankedDet& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.image_id != b.image_id) return a.image_id < b.image_id;
  return std::tie(a.box.x1, a.box.y1, a.box.x2, a.box.y2) <
         std::tie(b.box.x1, b.box.y1, b.box.x2, b.box.y2);
}

}  // namespace

MapResult evaluate_map(const DetectionMap& dets, const Dataset& gt, double iou_thresh,
                       ApMethod method) {
  const int n_cats = static_cast<int>(gt.categories.size());
  MapResult result;
  result.per_category_ap.assign(static_cast<std::size_t>(n_cats), -1.0);

  std::map<std::string, const ImageRecord*> images;
  for (const auto& img : gt.images) images[img.id] = &img;

  double ap_sum = 0.0;
  int ap_count = 0;
  for (int c = 0; c < n_cats; ++c) {
    int npos = 0;
    for (const auto& img : gt.images) {
      for (const auto& a : img.hidden_gt) {
        if (a.category == c) ++npos;
      }
    }
    if (npos == 0) continue;

    std::vector<RankedDet> ranked;
    for (const auto& [id, list] : dets) {
      if (!images.count(id)) continue;
      for (const auto& d : list) {
        if (d.category == c) ranked.push_back(RankedDet{d.score, id, d.bbox});
      }
    }
    std::sort(ranked.begin(), ranked.end(), ranked_before);

    // Per-image flags for already-claimed ground-truth boxes of category c.
    std::map<std::string, std::vector<char>> used;
    std::map<std::string, std::vector<const Annotation*>> gt_boxes;
    for (const auto& img : gt.images) {
      for (const auto& a : img.hidden_gt) {
        if (a.category == c) gt_boxes[img.id].push_back(&a);
      }
    }
    for (auto& [id, v] : gt_boxes) used[id].assign(v.size(), 0);

    std::vector<double> rec, prec;
    rec.reserve(ranked.size());
    prec.reserve(ranked.size());
    int tp = 0, fp = 0;
    for (const auto& rd : ranked) {
      bool matched = false;
      const auto git = gt_boxes.find(rd.image_id);
      if (git != gt_boxes.end()) {
        auto& flags = used[rd.image_id];
        double best_iou = 0.0;
        int best = -1;
        for (std::size_t j = 0; j < git->second.size(); ++j) {
          if (flags[j]) continue;
          const double v = iou(rd.box, git->second[j]->bbox);
          if (v >= iou_thresh && v > best_iou) {
            best_iou = v;
            best = static_cast<int>(j);
          }
        }
        if (best >= 0) {
          flags[static_cast<std::size_t>(best)] = 1;
          matched = true;
        }
      }
      matched ? ++tp : ++fp;
      rec.push_back(static_cast<double>(tp) / static_cast<double>(npos));
      prec.push_back(static_cast<double>(tp) / static_cast<double>(tp + fp));
    }
    const double ap = voc_ap(rec, prec, method);
    result.per_category_ap[static_cast<std::size_t>(c)] = ap;
    ap_sum += ap;
    ++ap_count;
  }
  result.map = ap_count > 0 ? ap_sum / ap_count : 0.0;
  return result;
}

CorlocResult evaluate_corloc(const DetectionMap& dets, const Dataset& target_train,
                             double iou_thresh) {
  const int n_cats = static_cast<int>(target_train.categories.size());
  CorlocResult result;
  result.per_category.assign(static_cast<std::size_t>(n_cats), -1.0);

  double sum = 0.0;
  int count = 0;
  for (int c = 0; c < n_cats; ++c) {
    int n_images = 0, correct = 0;
    for (const auto& img : target_train.images) {
      bool contains = false;
      for (const auto& a : img.hidden_gt) {
        if (a.category == c) {
          contains = true;
          break;
        }
      }
      if (!contains) continue;
      ++n_images;

      const auto it = dets.find(img.id);
      if (it == dets.end()) continue;
      const Detection* top = nullptr;
      for (const auto& d : it->second) {
        if (d.category != c) continue;
        if (!top || d.score > top->score) top = &d;
      }
      if (!top) continue;

      double best = 0.0;
      for (const auto& a : img.hidden_gt) {
        if (a.category == c) best = std::max(best, iou(top->bbox, a.bbox));
      }
      if (best > iou_thresh) ++correct;  // strict, by definition
    }
    if (n_images == 0) continue;
    const double v = static_cast<double>(correct) / static_cast<double>(n_images);
    result.per_category[static_cast<std::size_t>(c)] = v;
    sum += v;
    ++count;
  }
  result.mean = count > 0 ? sum / count : 0.0;
  return result;
}

CorlocResult evaluate_corloc(const DetectorFn& detector, const Dataset& target_train,
                             double iou_thresh) {
  DetectionMap dets;
  for (const auto& img : target_train.images) {
    auto d = detector(training_view(img));
    if (!d.empty()) dets.emplace(img.id, std::move(d));
  }
  return evaluate_corloc(dets, target_train, iou_thresh);
}

}  // namespace wsod
