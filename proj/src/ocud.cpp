#include "wsod/ocud.hpp"

#include <algorithm>
#include <fstream>

#include <json.hpp>

#include "wsod/rng.hpp"

namespace wsod {

using nlohmann::json;

double ocud_score(const OcudParams& p, const Eigen::VectorXd& feature) {
  if (feature.size() != p.w.size()) {
    throw ValidationError("ocud_score: feature dim " + std::to_string(feature.size()) +
                          " != weight dim " + std::to_string(p.w.size()));
  }
  return sigmoid(p.w.dot(feature) + p.b);
}

namespace {

struct ImageBatch {
  Eigen::MatrixXd feats;        // n_candidates x d
  std::vector<int> pos, neg;    // candidate indices by label
};

double batch_loss(const OcudParams& p, const ImageBatch& b) {
  // Mean BCE over all candidates of the image, positives and negatives alike.
  const Eigen::VectorXd z = (b.feats * p.w).array() + p.b;
  double loss = 0.0;
  auto bce = [](double zi, double t) {
    const double pr = std::clamp(sigmoid(zi), 1e-12, 1.0 - 1e-12);
    return -(t * std::log(pr) + (1.0 - t) * std::log(1.0 - pr));
  };
  for (int i : b.pos) loss += bce(z[i], 1.0);
  for (int i : b.neg) loss += bce(z[i], 0.0);
  return loss / static_cast<double>(b.pos.size() + b.neg.size());
}

}  // namespace

OcudParams train_ocud(const std::vector<ImageView>& images, const CandidateSource& source,
                      const OcudTrainConfig& cfg, TrainTrace* trace) {
  if (images.empty()) throw ValidationError("train_ocud: empty dataset list");
  if (cfg.steps < 0 || cfg.lr <= 0.0) {
    throw ValidationError("train_ocud: steps must be >= 0 and lr > 0");
  }

  std::vector<ImageBatch> batches;
  batches.reserve(images.size());
  int skipped = 0;
  Eigen::Index d = -1;
  for (const auto& view : images) {
    const auto cands = source(view);
    if (cands.empty()) {
      ++skipped;
      continue;
    }
    if (d < 0) d = cands[0].feature.size();
    ImageBatch b;
    b.feats.resize(static_cast<Eigen::Index>(cands.size()), d);
    for (std::size_t i = 0; i < cands.size(); ++i) {
      if (cands[i].feature.size() != d) {
        throw ValidationError("train_ocud: inconsistent feature dims");
      }
      b.feats.row(static_cast<Eigen::Index>(i)) = cands[i].feature.transpose();
      double best = 0.0;
      for (const auto& ann : view.annotations) {
        best = std::max(best, iou(cands[i].box, ann.bbox));
      }
      (best >= cfg.match_iou ? b.pos : b.neg).push_back(static_cast<int>(i));
    }
    batches.push_back(std::move(b));
  }
  if (batches.empty()) {
    throw ValidationError("train_ocud: no image produced any candidate");
  }
  if (trace) trace->skipped_images = skipped;

  OcudParams p = cfg.warm_start ? *cfg.warm_start
                                : OcudParams{Eigen::VectorXd::Zero(d), 0.0};
  if (p.w.size() != d) {
    throw ValidationError("train_ocud: warm-start dim does not match features");
  }

  auto full_loss = [&] {
    double s = 0.0;
    for (const auto& b : batches) s += batch_loss(p, b);
    return s / static_cast<double>(batches.size());
  };
  if (trace) trace->epoch_loss.push_back(full_loss());
  if (cfg.steps == 0) return p;

  Rng rng(cfg.seed);
  const int epoch = static_cast<int>(batches.size());
  const int drop_step = static_cast<int>(cfg.lr_drop_at * cfg.steps);
  std::vector<int> sel;
  for (int step = 0; step < cfg.steps; ++step) {
    const double lr = step < drop_step ? cfg.lr : cfg.lr * 0.1;
    const auto& b = batches[static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<int>(batches.size()) - 1))];

    sel.assign(b.pos.begin(), b.pos.end());
    if (b.pos.empty()) {
      sel = b.neg;
    } else {
      const int want = static_cast<int>(
          std::lround(cfg.neg_pos_ratio * static_cast<double>(b.pos.size())));
      const int n_neg = static_cast<int>(b.neg.size());
      if (want >= n_neg) {
        sel.insert(sel.end(), b.neg.begin(), b.neg.end());
      } else {
        std::vector<int> negs = b.neg;  // partial Fisher-Yates for the first `want`
        for (int i = 0; i < want; ++i) {
          std::swap(negs[i], negs[rng.uniform_int(i, n_neg - 1)]);
        }
        sel.insert(sel.end(), negs.begin(), negs.begin() + want);
      }
    }
    if (sel.empty()) continue;

    Eigen::VectorXd gw = Eigen::VectorXd::Zero(d);
    double gb = 0.0;
    const std::size_t n_pos = b.pos.size();
    for (std::size_t si = 0; si < sel.size(); ++si) {
      const int i = sel[si];
      const double t = si < n_pos ? 1.0 : 0.0;
      const double pr = sigmoid(b.feats.row(i).dot(p.w) + p.b);
      const double g = pr - t;
      gw += g * b.feats.row(i).transpose();
      gb += g;
    }
    const double inv = 1.0 / static_cast<double>(sel.size());
    p.w -= lr * inv * gw;
    p.b -= lr * inv * gb;

    if (trace && (step + 1) % epoch == 0) trace->epoch_loss.push_back(full_loss());
  }
  return p;
}

std::vector<Proposal> detect_objectness(const OcudParams& p, const ImageView& view,
                                        const CandidateSource& source,
                                        const ProposalConfig& cfg) {
  if (cfg.max_proposals < 1) {
    throw ValidationError("detect_objectness: max_proposals must be >= 1");
  }
  auto cands = source(view);
  if (cands.empty()) return {};

  std::vector<BBox> boxes;
  std::vector<double> scores;
  boxes.reserve(cands.size());
  scores.reserve(cands.size());
  for (const auto& c : cands) {
    boxes.push_back(c.box);
    scores.push_back(ocud_score(p, c.feature));
  }
  const auto kept = nms_indices(boxes, scores, {}, cfg.nms_iou);

  std::vector<Proposal> out;
  const std::size_t n = std::min<std::size_t>(kept.size(),
                                              static_cast<std::size_t>(cfg.max_proposals));
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t k = kept[i];
    out.push_back(Proposal{boxes[k], scores[k], std::move(cands[k].feature)});
  }
  return out;
}

void save_ocud_params(const OcudParams& p, const std::string& path) {
  json j;
  j["w"] = std::vector<double>(p.w.data(), p.w.data() + p.w.size());
  j["b"] = p.b;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << j.dump(2) << "\n";
}

OcudParams load_ocud_params(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError("parse error in '" + path + "': " + e.what());
  }
  const auto w = j.at("w").get<std::vector<double>>();
  OcudParams p{Eigen::VectorXd::Map(w.data(), static_cast<Eigen::Index>(w.size())),
               j.at("b").get<double>()};
  return p;
}

}  // namespace wsod
