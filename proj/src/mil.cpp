#include "wsod/mil.hpp"

#include <algorithm>
#include <fstream>

#include <json.hpp>

#include "wsod/rng.hpp"

namespace wsod {

using nlohmann::json;

namespace {

constexpr double kYhatClampLo = 1e-7;
constexpr double kYhatClampHi = 1.0 - 1e-7;

Eigen::MatrixXd softmax_columns(const Eigen::MatrixXd& z) {
  // Softmax over the row index, independently per column, max-subtracted.
  Eigen::MatrixXd out(z.rows(), z.cols());
  for (Eigen::Index j = 0; j < z.cols(); ++j) {
    const Eigen::ArrayXd e = (z.col(j).array() - z.col(j).maxCoeff()).exp();
    out.col(j) = e / e.sum();
  }
  return out;
}

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& z) {
  Eigen::MatrixXd out(z.rows(), z.cols());
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const Eigen::ArrayXd e = (z.row(i).array() - z.row(i).maxCoeff()).exp();
    out.row(i) = (e / e.sum()).transpose();
  }
  return out;
}

void check_forward_inputs(const MilParams& p, const Eigen::MatrixXd& features) {
  if (features.rows() < 1) {
    throw ValidationError("mil_forward: needs at least one proposal");
  }
  if (features.cols() != p.Wd.cols() || features.cols() != p.Wc.cols()) {
    throw ValidationError("mil_forward: feature dim does not match parameters");
  }
  if (p.Wd.rows() != p.Wc.rows() || p.bd.size() != p.Wd.rows() ||
      p.bc.size() != p.Wc.rows()) {
    throw ValidationError("mil_forward: inconsistent parameter shapes");
  }
}

}  // namespace

MilParams MilParams::zeros(int num_categories, int feature_dim, double beta,
                           double lambda) {
  if (num_categories < 1 || feature_dim < 1) {
    throw ValidationError("MilParams::zeros: dims must be positive");
  }
  return MilParams{Eigen::MatrixXd::Zero(num_categories, feature_dim),
                   Eigen::MatrixXd::Zero(num_categories, feature_dim),
                   Eigen::VectorXd::Zero(num_categories),
                   Eigen::VectorXd::Zero(num_categories), beta, lambda};
}

ScoreTensors mil_forward(const MilParams& p, const Eigen::MatrixXd& features) {
  check_forward_inputs(p, features);
  ScoreTensors t;
  Eigen::MatrixXd xd = features * p.Wd.transpose();
  xd.rowwise() += p.bd.transpose();
  t.sd = (1.0 / (1.0 + (-xd.array()).exp())).matrix();
  t.sigma_d = softmax_columns(p.beta * t.sd);
  Eigen::MatrixXd xc = features * p.Wc.transpose();
  xc.rowwise() += p.bc.transpose();
  t.sigma_c = softmax_rows(xc);
  t.s = t.sigma_d.cwiseProduct(t.sigma_c);
  t.yhat = t.s.colwise().sum().transpose();
  return t;
}

MilLoss mil_loss(const MilParams& p, const Eigen::MatrixXd& features,
                 const Eigen::VectorXd& y, const Eigen::VectorXd& objectness) {
  const auto t = mil_forward(p, features);
  const Eigen::Index R = features.rows();
  const Eigen::Index C = p.Wd.rows();
  if (y.size() != C) throw ValidationError("mil_loss: label vector size != C");
  if (objectness.size() != R) throw ValidationError("mil_loss: objectness size != R");

  MilLoss out;
  for (Eigen::Index j = 0; j < C; ++j) {
    const double yh = std::clamp(t.yhat[j], kYhatClampLo, kYhatClampHi);
    out.wsddn -= y[j] * std::log(yh) + (1.0 - y[j]) * std::log(1.0 - yh);
  }
  out.wsddn /= static_cast<double>(C);

  for (Eigen::Index i = 0; i < R; ++i) {
    const double m = t.sd.row(i).maxCoeff();
    const double gap = m - objectness[i];
    out.guide += gap * gap;
  }
  out.guide /= static_cast<double>(R);

  out.total = out.wsddn + p.lambda * out.guide;
  return out;
}

MilGrad mil_grad(const MilParams& p, const Eigen::MatrixXd& features,
                 const Eigen::VectorXd& y, const Eigen::VectorXd& objectness) {
  const auto t = mil_forward(p, features);
  const Eigen::Index R = features.rows();
  const Eigen::Index C = p.Wd.rows();
  if (y.size() != C) throw ValidationError("mil_grad: label vector size != C");
  if (objectness.size() != R) throw ValidationError("mil_grad: objectness size != R");

  // d(wsddn)/d(yhat); zero where the clamp is active.
  Eigen::VectorXd dyhat(C);
  for (Eigen::Index j = 0; j < C; ++j) {
    if (t.yhat[j] <= kYhatClampLo || t.yhat[j] >= kYhatClampHi) {
      dyhat[j] = 0.0;
    } else {
      dyhat[j] = (-y[j] / t.yhat[j] + (1.0 - y[j]) / (1.0 - t.yhat[j])) /
                 static_cast<double>(C);
    }
  }

  // s_ij = sigma_d_ij * sigma_c_ij, yhat_j = sum_i s_ij.
  Eigen::MatrixXd ds = dyhat.transpose().replicate(R, 1);
  Eigen::MatrixXd dsigma_d = ds.cwiseProduct(t.sigma_c);
  Eigen::MatrixXd dsigma_c = ds.cwiseProduct(t.sigma_d);

  // Row-wise softmax backward for sigma_c.
  Eigen::MatrixXd dxc(R, C);
  for (Eigen::Index i = 0; i < R; ++i) {
    const double dot = dsigma_c.row(i).dot(t.sigma_c.row(i));
    dxc.row(i) =
        t.sigma_c.row(i).cwiseProduct(dsigma_c.row(i) - Eigen::RowVectorXd::Constant(C, dot));
  }

  // Column-wise softmax backward for sigma_d; the softmax input is beta * sd.
  Eigen::MatrixXd dsd(R, C);
  for (Eigen::Index j = 0; j < C; ++j) {
    const double dot = dsigma_d.col(j).dot(t.sigma_d.col(j));
    dsd.col(j) = p.beta * t.sigma_d.col(j).cwiseProduct(
                              dsigma_d.col(j) - Eigen::VectorXd::Constant(R, dot));
  }

  // Guide loss reaches sd directly through the per-row max (lowest index wins ties).
  for (Eigen::Index i = 0; i < R; ++i) {
    Eigen::Index jmax = 0;
    t.sd.row(i).maxCoeff(&jmax);
    dsd(i, jmax) +=
        p.lambda * 2.0 / static_cast<double>(R) * (t.sd(i, jmax) - objectness[i]);
  }

  const Eigen::MatrixXd dxd =
      dsd.cwiseProduct(t.sd.cwiseProduct((1.0 - t.sd.array()).matrix()));

  MilGrad g;
  g.Wd = dxd.transpose() * features;
  g.bd = dxd.colwise().sum().transpose();
  g.Wc = dxc.transpose() * features;
  g.bc = dxc.colwise().sum().transpose();
  return g;
}

Eigen::MatrixXd fuse_scores(const Eigen::MatrixXd& s, const Eigen::VectorXd& objectness,
                            double eta) {
  if (objectness.size() != s.rows()) {
    throw ValidationError("fuse_scores: objectness length != proposal count");
  }
  if (!(eta >= 0.0 && eta <= 1.0)) {
    throw ValidationError("fuse_scores: eta must be in [0, 1]");
  }
  Eigen::MatrixXd out = eta * s;
  out.colwise() += (1.0 - eta) * objectness;
  return out;
}

MilParams train_mil(const std::vector<ImageView>& target_images, const OcudParams& ocud,
                    const CandidateSource& source, const MilTrainConfig& cfg,
                    TrainTrace* trace) {
  if (cfg.steps < 0 || cfg.lr <= 0.0) {
    throw ValidationError("train_mil: steps must be >= 0 and lr > 0");
  }
  const int C = cfg.warm_start ? cfg.warm_start->num_categories() : cfg.num_categories;
  if (C < 1) throw ValidationError("train_mil: num_categories must be set");

  struct Sample {
    Eigen::MatrixXd feats;
    Eigen::VectorXd y;
    Eigen::VectorXd obj;
  };
  std::vector<Sample> samples;
  int skipped = 0;
  for (const auto& view : target_images) {
    const auto proposals = detect_objectness(ocud, view, source, cfg.proposals);
    if (proposals.empty() || view.labels.empty()) {
      ++skipped;
      continue;
    }
    Sample smp;
    const auto R = static_cast<Eigen::Index>(proposals.size());
    smp.feats.resize(R, proposals[0].feature.size());
    smp.obj.resize(R);
    for (Eigen::Index i = 0; i < R; ++i) {
      smp.feats.row(i) = proposals[static_cast<std::size_t>(i)].feature.transpose();
      smp.obj[i] = proposals[static_cast<std::size_t>(i)].objectness;
    }
    smp.y = Eigen::VectorXd::Zero(C);
    for (int l : view.labels) {
      if (l < 0 || l >= C) {
        throw ValidationError("train_mil: image '" + view.id + "' label " +
                              std::to_string(l) + " outside [0, C)");
      }
      smp.y[l] = 1.0;
    }
    samples.push_back(std::move(smp));
  }
  if (samples.empty()) throw ValidationError("train_mil: no trainable image");
  if (trace) trace->skipped_images = skipped;

  MilParams p = cfg.warm_start
                    ? *cfg.warm_start
                    : MilParams::zeros(C, static_cast<int>(samples[0].feats.cols()),
                                       cfg.beta, cfg.lambda);
  if (p.feature_dim() != samples[0].feats.cols()) {
    throw ValidationError("train_mil: warm-start dim does not match features");
  }

  auto full_loss = [&] {
    double s = 0.0;
    for (const auto& smp : samples) s += mil_loss(p, smp.feats, smp.y, smp.obj).total;
    return s / static_cast<double>(samples.size());
  };
  if (trace) trace->epoch_loss.push_back(full_loss());
  if (cfg.steps == 0) return p;

  Rng rng(cfg.seed);
  const int epoch = static_cast<int>(samples.size());
  const int drop_step = static_cast<int>(cfg.lr_drop_at * cfg.steps);
  for (int step = 0; step < cfg.steps; ++step) {
    const double lr = step < drop_step ? cfg.lr : cfg.lr * 0.1;
    const auto& smp = samples[static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<int>(samples.size()) - 1))];
    const MilGrad g = mil_grad(p, smp.feats, smp.y, smp.obj);
    p.Wd -= lr * g.Wd;
    p.bd -= lr * g.bd;
    p.Wc -= lr * g.Wc;
    p.bc -= lr * g.bc;
    if (trace && (step + 1) % epoch == 0) trace->epoch_loss.push_back(full_loss());
  }
  return p;
}

std::vector<Detection> detect_target(const MilParams& mil, const OcudParams& ocud,
                                     const ImageView& view, const CandidateSource& source,
                                     const DetectConfig& cfg) {
  const auto proposals = detect_objectness(ocud, view, source, cfg.proposals);
  if (proposals.empty()) return {};

  const auto R = static_cast<Eigen::Index>(proposals.size());
  Eigen::MatrixXd feats(R, proposals[0].feature.size());
  Eigen::VectorXd obj(R);
  for (Eigen::Index i = 0; i < R; ++i) {
    feats.row(i) = proposals[static_cast<std::size_t>(i)].feature.transpose();
    obj[i] = proposals[static_cast<std::size_t>(i)].objectness;
  }
  const ScoreTensors t = mil_forward(mil, feats);
  const Eigen::MatrixXd fused = fuse_scores(t.s, obj, cfg.eta);
  const Eigen::MatrixXd& order = cfg.fuse_before_nms ? fused : t.s;

  const int C = mil.num_categories();
  std::vector<BBox> boxes;
  std::vector<double> order_scores;
  std::vector<int> cats;
  boxes.reserve(static_cast<std::size_t>(R) * C);
  for (Eigen::Index i = 0; i < R; ++i) {
    for (int j = 0; j < C; ++j) {
      boxes.push_back(proposals[static_cast<std::size_t>(i)].box);
      order_scores.push_back(order(i, j));
      cats.push_back(j);
    }
  }
  const auto kept = nms_indices(boxes, order_scores,
                                cfg.per_category_nms ? std::span<const int>(cats)
                                                     : std::span<const int>(),
                                cfg.nms_iou);
  std::vector<Detection> out;
  out.reserve(kept.size());
  for (std::size_t k : kept) {
    const Eigen::Index i = static_cast<Eigen::Index>(k) / C;
    const int j = static_cast<int>(k) % C;
    out.push_back(Detection{boxes[k], j, fused(i, j)});
  }
  return out;
}

namespace {

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
  const auto rows = j.get<std::vector<std::vector<double>>>();
  if (rows.empty()) throw ValidationError("checkpoint: empty matrix");
  Eigen::MatrixXd m(rows.size(), rows[0].size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows[0].size()) {
      throw ValidationError("checkpoint: ragged matrix");
    }
    for (std::size_t c = 0; c < rows[i].size(); ++c) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = rows[i][c];
    }
  }
  return m;
}

}  // namespace

void save_mil_params(const MilParams& p, double eta, const std::string& path) {
  json j;
  j["Wd"] = matrix_to_json(p.Wd);
  j["Wc"] = matrix_to_json(p.Wc);
  j["bd"] = std::vector<double>(p.bd.data(), p.bd.data() + p.bd.size());
  j["bc"] = std::vector<double>(p.bc.data(), p.bc.data() + p.bc.size());
  j["beta"] = p.beta;
  j["lambda"] = p.lambda;
  j["eta"] = eta;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << j.dump(2) << "\n";
}

MilCheckpoint load_mil_params(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError("parse error in '" + path + "': " + e.what());
  }
  MilCheckpoint ck;
  ck.params.Wd = matrix_from_json(j.at("Wd"));
  ck.params.Wc = matrix_from_json(j.at("Wc"));
  const auto bd = j.at("bd").get<std::vector<double>>();
  const auto bc = j.at("bc").get<std::vector<double>>();
  ck.params.bd = Eigen::VectorXd::Map(bd.data(), static_cast<Eigen::Index>(bd.size()));
  ck.params.bc = Eigen::VectorXd::Map(bc.data(), static_cast<Eigen::Index>(bc.size()));
  ck.params.beta = j.at("beta").get<double>();
  ck.params.lambda = j.at("lambda").get<double>();
  ck.eta = j.at("eta").get<double>();
  return ck;
}

}  // namespace wsod
