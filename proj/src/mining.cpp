#include "wsod/mining.hpp"

#include <algorithm>
#include <numeric>

namespace wsod {

void MiningConfig::validate() const {
  if (!(tau > 0.0 && tau < 1.0)) throw ValidationError("mining: tau must be in (0, 1)");
  if (!(o > 0.0 && o <= 1.0)) throw ValidationError("mining: o must be in (0, 1]");
}

namespace {

DetectionMap run_detector(const std::vector<ImageView>& images, const DetectorFn& detector) {
  DetectionMap dets;
  for (const auto& view : images) {
    auto d = detector(view);
    if (!d.empty()) dets.emplace(view.id, std::move(d));
  }
  return dets;
}

Annotation pseudo_from(const Detection& d) {
  return Annotation{d.bbox, d.category, Origin::pseudo, d.score};
}

}  // namespace

MinedMap mine_source(const std::vector<ImageView>& images, const DetectionMap& dets,
                     const MiningConfig& cfg) {
  cfg.validate();
  MinedMap mined;
  for (const auto& view : images) {
    const auto it = dets.find(view.id);
    if (it == dets.end()) continue;
    std::vector<BBox> originals;
    for (const auto& ann : view.annotations) {
      if (ann.origin == Origin::original) originals.push_back(ann.bbox);
    }
    std::vector<Annotation> accepted;
    for (const auto& p : it->second) {
      if (!(p.score > cfg.tau)) continue;
      if (overlap_over_pred(p.bbox, std::span<const BBox>(originals)) < cfg.o) {
        accepted.push_back(pseudo_from(p));
      }
    }
    if (!accepted.empty()) mined.emplace(view.id, std::move(accepted));
  }
  return mined;
}

MinedMap mine_source(const std::vector<ImageView>& images, const DetectorFn& detector,
                     const MiningConfig& cfg) {
  return mine_source(images, run_detector(images, detector), cfg);
}

MinedMap mine_target(const std::vector<ImageView>& images, const DetectionMap& dets,
                     const MiningConfig& cfg) {
  cfg.validate();
  MinedMap mined;
  for (const auto& view : images) {
    const auto it = dets.find(view.id);
    if (it == dets.end()) continue;
    std::vector<Annotation> accepted;
    for (int y : view.labels) {
      double max_score = -1.0;
      for (const auto& p : it->second) {
        if (p.category == y) max_score = std::max(max_score, p.score);
      }
      if (max_score < 0.0) continue;  // no detection for this positive class
      for (const auto& p : it->second) {
        if (p.category != y) continue;
        if (p.score > cfg.tau || p.score == max_score) accepted.push_back(pseudo_from(p));
      }
    }
    if (!accepted.empty()) mined.emplace(view.id, std::move(accepted));
  }
  return mined;
}

MinedMap mine_target(const std::vector<ImageView>& images, const DetectorFn& detector,
                     const MiningConfig& cfg) {
  return mine_target(images, run_detector(images, detector), cfg);
}

MiningStats mining_stats(const MinedMap& mined,
                         const std::map<std::string, std::vector<Annotation>>& gt,
                         double iou_thresh) {
  MiningStats st;
  for (const auto& [id, g] : gt) st.total_gt += static_cast<int>(g.size());
  for (const auto& [id, boxes] : mined) st.mined += static_cast<int>(boxes.size());
  if (st.mined == 0) return st;  // precision 1, recall 0 by convention

  for (const auto& [id, boxes] : mined) {
    const auto git = gt.find(id);
    if (git == gt.end()) continue;
    const auto& g = git->second;
    std::vector<char> used(g.size(), 0);

    std::vector<std::size_t> order(boxes.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return boxes[a].score.value_or(0.0) > boxes[b].score.value_or(0.0);
    });

    for (std::size_t idx : order) {
      const auto& m = boxes[idx];
      double best_iou = 0.0;
      int best = -1;
      for (std::size_t j = 0; j < g.size(); ++j) {
        if (used[j] || g[j].category != m.category) continue;
        const double v = iou(m.bbox, g[j].bbox);
        if (v >= iou_thresh && v > best_iou) {
          best_iou = v;
          best = static_cast<int>(j);
        }
      }
      if (best >= 0) {
        used[static_cast<std::size_t>(best)] = 1;
        ++st.matched;
      }
    }
  }
  st.precision = static_cast<double>(st.matched) / static_cast<double>(st.mined);
  st.recall = st.total_gt > 0
                  ? static_cast<double>(st.matched) / static_cast<double>(st.total_gt)
                  : 1.0;
  return st;
}

}  // namespace wsod
