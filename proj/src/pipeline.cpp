#include "wsod/pipeline.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "wsod/config.hpp"
#include "wsod/rng.hpp"

namespace wsod {

using nlohmann::json;

void LoopConfig::validate() const {
  auto require = [](bool ok, const char* msg) {
    if (!ok) throw ValidationError(std::string("loop config: ") + msg);
  };
  require(refinements >= 0, "refinements must be >= 0");
  require(beta > 0.0, "beta must be > 0");
  require(lambda >= 0.0, "lambda must be >= 0");
  require(eta >= 0.0 && eta <= 1.0, "eta must be in [0, 1]");
  require(tau > 0.0 && tau < 1.0, "tau must be in (0, 1)");
  require(overlap_o > 0.0 && overlap_o <= 1.0, "overlap_o must be in (0, 1]");
  require(nms_iou >= 0.0 && nms_iou <= 1.0, "nms_iou must be in [0, 1]");
  require(proposal_nms_iou >= 0.0 && proposal_nms_iou <= 1.0,
          "proposal_nms_iou must be in [0, 1]");
  require(max_proposals >= 1, "max_proposals must be >= 1");
  require(ocud_initial_steps >= 0 && ocud_refine_steps >= 0 && mil_initial_steps >= 0 &&
              mil_refine_steps >= 0,
          "step counts must be >= 0");
  require(ocud_lr > 0.0 && mil_lr > 0.0, "learning rates must be > 0");
  require(lr_drop_at >= 0.0 && lr_drop_at <= 1.0, "lr_drop_at must be in [0, 1]");
  require(match_iou >= 0.0 && match_iou <= 1.0, "match_iou must be in [0, 1]");
  require(neg_pos_ratio >= 0.0, "neg_pos_ratio must be >= 0");
  require(source_fraction > 0.0 && source_fraction <= 1.0,
          "source_fraction must be in (0, 1]");
}

LoopConfig loop_config_from_file(const std::string& path) {
  KvReader kv(path);
  LoopConfig c;
  c.refinements = kv.get_int("refinements", c.refinements);
  c.beta = kv.get_double("beta", c.beta);
  c.lambda = kv.get_double("lambda", c.lambda);
  c.eta = kv.get_double("eta", c.eta);
  c.tau = kv.get_double("tau", c.tau);
  c.overlap_o = kv.get_double("overlap_o", c.overlap_o);
  c.nms_iou = kv.get_double("nms_iou", c.nms_iou);
  c.proposal_nms_iou = kv.get_double("proposal_nms_iou", c.proposal_nms_iou);
  c.max_proposals = kv.get_int("max_proposals", c.max_proposals);
  c.ocud_initial_steps = kv.get_int("ocud_initial_steps", c.ocud_initial_steps);
  c.ocud_refine_steps = kv.get_int("ocud_refine_steps", c.ocud_refine_steps);
  c.mil_initial_steps = kv.get_int("mil_initial_steps", c.mil_initial_steps);
  c.mil_refine_steps = kv.get_int("mil_refine_steps", c.mil_refine_steps);
  c.ocud_lr = kv.get_double("ocud_lr", c.ocud_lr);
  c.mil_lr = kv.get_double("mil_lr", c.mil_lr);
  c.lr_drop_at = kv.get_double("lr_drop_at", c.lr_drop_at);
  c.match_iou = kv.get_double("match_iou", c.match_iou);
  c.neg_pos_ratio = kv.get_double("neg_pos_ratio", c.neg_pos_ratio);
  c.mil_warm_start = kv.get_bool("mil_warm_start", c.mil_warm_start);
  c.fuse_before_nms = kv.get_bool("fuse_before_nms", c.fuse_before_nms);
  c.per_category_nms = kv.get_bool("per_category_nms", c.per_category_nms);
  c.source_in_refinement = kv.get_bool("source_in_refinement", c.source_in_refinement);
  c.source_fraction = kv.get_double("source_fraction", c.source_fraction);
  c.ap_method = ap_method_from_string(
      kv.get_string("ap_method", std::string(to_string(c.ap_method))));
  c.seed = kv.get_u64("seed", c.seed);

  const auto base = std::filesystem::path(path).parent_path();
  auto resolve = [&](const std::string& p) {
    if (p.empty()) return p;
    std::filesystem::path fp(p);
    return fp.is_absolute() ? p : (base / fp).string();
  };
  c.world_config = resolve(kv.get_string("world_config", ""));
  c.source_dataset = resolve(kv.get_string("source_dataset", ""));
  c.target_train_dataset = resolve(kv.get_string("target_train_dataset", ""));
  c.target_test_dataset = resolve(kv.get_string("target_test_dataset", ""));
  kv.finish();
  c.validate();
  return c;
}

namespace {

json loop_config_to_json(const LoopConfig& c) {
  json j;
  j["refinements"] = c.refinements;
  j["beta"] = c.beta;
  j["lambda"] = c.lambda;
  j["eta"] = c.eta;
  j["tau"] = c.tau;
  j["overlap_o"] = c.overlap_o;
  j["nms_iou"] = c.nms_iou;
  j["proposal_nms_iou"] = c.proposal_nms_iou;
  j["max_proposals"] = c.max_proposals;
  j["ocud_initial_steps"] = c.ocud_initial_steps;
  j["ocud_refine_steps"] = c.ocud_refine_steps;
  j["mil_initial_steps"] = c.mil_initial_steps;
  j["mil_refine_steps"] = c.mil_refine_steps;
  j["ocud_lr"] = c.ocud_lr;
  j["mil_lr"] = c.mil_lr;
  j["lr_drop_at"] = c.lr_drop_at;
  j["match_iou"] = c.match_iou;
  j["neg_pos_ratio"] = c.neg_pos_ratio;
  j["mil_warm_start"] = c.mil_warm_start;
  j["fuse_before_nms"] = c.fuse_before_nms;
  j["per_category_nms"] = c.per_category_nms;
  j["source_in_refinement"] = c.source_in_refinement;
  j["source_fraction"] = c.source_fraction;
  j["ap_method"] = std::string(to_string(c.ap_method));
  j["seed"] = c.seed;
  j["world_config"] = c.world_config;
  j["source_dataset"] = c.source_dataset;
  j["target_train_dataset"] = c.target_train_dataset;
  j["target_test_dataset"] = c.target_test_dataset;
  return j;
}

LoopConfig loop_config_from_json(const json& j) {
  LoopConfig c;
  c.refinements = j.at("refinements").get<int>();
  c.beta = j.at("beta").get<double>();
  c.lambda = j.at("lambda").get<double>();
  c.eta = j.at("eta").get<double>();
  c.tau = j.at("tau").get<double>();
  c.overlap_o = j.at("overlap_o").get<double>();
  c.nms_iou = j.at("nms_iou").get<double>();
  c.proposal_nms_iou = j.at("proposal_nms_iou").get<double>();
  c.max_proposals = j.at("max_proposals").get<int>();
  c.ocud_initial_steps = j.at("ocud_initial_steps").get<int>();
  c.ocud_refine_steps = j.at("ocud_refine_steps").get<int>();
  c.mil_initial_steps = j.at("mil_initial_steps").get<int>();
  c.mil_refine_steps = j.at("mil_refine_steps").get<int>();
  c.ocud_lr = j.at("ocud_lr").get<double>();
  c.mil_lr = j.at("mil_lr").get<double>();
  c.lr_drop_at = j.at("lr_drop_at").get<double>();
  c.match_iou = j.at("match_iou").get<double>();
  c.neg_pos_ratio = j.at("neg_pos_ratio").get<double>();
  c.mil_warm_start = j.at("mil_warm_start").get<bool>();
  c.fuse_before_nms = j.at("fuse_before_nms").get<bool>();
  c.per_category_nms = j.at("per_category_nms").get<bool>();
  c.source_in_refinement = j.at("source_in_refinement").get<bool>();
  c.source_fraction = j.at("source_fraction").get<double>();
  c.ap_method = ap_method_from_string(j.at("ap_method").get<std::string>());
  c.seed = j.at("seed").get<std::uint64_t>();
  c.world_config = j.at("world_config").get<std::string>();
  c.source_dataset = j.at("source_dataset").get<std::string>();
  c.target_train_dataset = j.at("target_train_dataset").get<std::string>();
  c.target_test_dataset = j.at("target_test_dataset").get<std::string>();
  return c;
}

json world_config_to_json(const WorldConfig& c) {
  json j;
  j["feature_dim"] = c.feature_dim;
  j["n_source_cats"] = c.n_source_cats;
  j["n_target_cats"] = c.n_target_cats;
  j["prototype_affinity"] = c.prototype_affinity;
  j["feature_noise_sigma"] = c.feature_noise_sigma;
  j["n_background_prototypes"] = c.n_background_prototypes;
  j["background_strength"] = c.background_strength;
  j["background_sigma"] = c.background_sigma;
  j["context_boxes_per_object"] = c.context_boxes_per_object;
  j["extra_context_box_prob"] = c.extra_context_box_prob;
  j["context_strength"] = c.context_strength;
  j["objects_per_image_min"] = c.objects_per_image_min;
  j["objects_per_image_max"] = c.objects_per_image_max;
  j["n_source_images"] = c.n_source_images;
  j["n_target_train_images"] = c.n_target_train_images;
  j["n_target_test_images"] = c.n_target_test_images;
  j["leak_rate"] = c.leak_rate;
  j["jitter_sigma"] = c.jitter_sigma;
  j["jitters_per_object"] = c.jitters_per_object;
  j["distractors_per_image"] = c.distractors_per_image;
  j["image_size"] = c.image_size;
  j["seed"] = c.seed;
  return j;
}

WorldConfig world_config_from_json(const json& j) {
  WorldConfig c;
  c.feature_dim = j.at("feature_dim").get<int>();
  c.n_source_cats = j.at("n_source_cats").get<int>();
  c.n_target_cats = j.at("n_target_cats").get<int>();
  c.prototype_affinity = j.at("prototype_affinity").get<double>();
  c.feature_noise_sigma = j.at("feature_noise_sigma").get<double>();
  c.n_background_prototypes = j.at("n_background_prototypes").get<int>();
  c.background_strength = j.at("background_strength").get<double>();
  c.background_sigma = j.at("background_sigma").get<double>();
  c.context_boxes_per_object = j.at("context_boxes_per_object").get<int>();
  c.extra_context_box_prob = j.at("extra_context_box_prob").get<double>();
  c.context_strength = j.at("context_strength").get<double>();
  c.objects_per_image_min = j.at("objects_per_image_min").get<int>();
  c.objects_per_image_max = j.at("objects_per_image_max").get<int>();
  c.n_source_images = j.at("n_source_images").get<int>();
  c.n_target_train_images = j.at("n_target_train_images").get<int>();
  c.n_target_test_images = j.at("n_target_test_images").get<int>();
  c.leak_rate = j.at("leak_rate").get<double>();
  c.jitter_sigma = j.at("jitter_sigma").get<double>();
  c.jitters_per_object = j.at("jitters_per_object").get<int>();
  c.distractors_per_image = j.at("distractors_per_image").get<int>();
  c.image_size = j.at("image_size").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

json iteration_to_json(const IterationReport& it) {
  json j;
  j["iteration"] = it.iteration;
  j["map"] = it.map;
  j["per_category_ap"] = it.per_category_ap;
  j["corloc"] = it.corloc;
  j["per_category_corloc"] = it.per_category_corloc;
  j["leaked_mean_objectness"] = it.leaked_mean_objectness;
  j["ocud_loss"] = it.ocud_loss;
  j["mil_loss"] = it.mil_loss;
  if (it.mining) {
    json m;
    m["source_precision"] = it.mining->source_precision;
    m["source_recall"] = it.mining->source_recall;
    m["target_precision"] = it.mining->target_precision;
    m["target_recall"] = it.mining->target_recall;
    m["source_mined"] = it.mining->source_mined;
    m["target_mined"] = it.mining->target_mined;
    j["mining"] = std::move(m);
  }
  return j;
}

IterationReport iteration_from_json(const json& j) {
  IterationReport it;
  it.iteration = j.at("iteration").get<int>();
  it.map = j.at("map").get<double>();
  it.per_category_ap = j.at("per_category_ap").get<std::vector<double>>();
  it.corloc = j.at("corloc").get<double>();
  it.per_category_corloc = j.at("per_category_corloc").get<std::vector<double>>();
  it.leaked_mean_objectness = j.at("leaked_mean_objectness").get<double>();
  it.ocud_loss = j.at("ocud_loss").get<std::vector<double>>();
  it.mil_loss = j.at("mil_loss").get<std::vector<double>>();
  if (j.contains("mining")) {
    const auto& m = j.at("mining");
    MiningReport mr;
    mr.source_precision = m.at("source_precision").get<double>();
    mr.source_recall = m.at("source_recall").get<double>();
    mr.target_precision = m.at("target_precision").get<double>();
    mr.target_recall = m.at("target_recall").get<double>();
    mr.source_mined = m.at("source_mined").get<int>();
    mr.target_mined = m.at("target_mined").get<int>();
    it.mining = mr;
  }
  return it;
}

}  // namespace

std::string report_to_json_string(const RunReport& report) {
  json j;
  j["config"] = loop_config_to_json(report.config);
  j["world"] = world_config_to_json(report.world);
  j["rng_streams"]["world"] = report.world.seed;
  j["rng_streams"]["ocud"] = report.ocud_seeds;
  j["rng_streams"]["mil"] = report.mil_seeds;
  json its = json::array();
  for (const auto& it : report.iterations) its.push_back(iteration_to_json(it));
  j["iterations"] = std::move(its);
  return j.dump(2) + "\n";
}

RunReport report_from_json_string(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("report parse error: ") + e.what());
  }
  RunReport r;
  r.config = loop_config_from_json(j.at("config"));
  r.world = world_config_from_json(j.at("world"));
  r.ocud_seeds = j.at("rng_streams").at("ocud").get<std::vector<std::uint64_t>>();
  r.mil_seeds = j.at("rng_streams").at("mil").get<std::vector<std::uint64_t>>();
  for (const auto& ji : j.at("iterations")) r.iterations.push_back(iteration_from_json(ji));
  return r;
}

RunReport load_report(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return report_from_json_string(ss.str());
}

void save_report(const RunReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << report_to_json_string(report);
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

std::vector<std::vector<std::string>> report_rows(const RunReport& report) {
  std::vector<std::vector<std::string>> rows;
  rows.push_back({"iteration", "map", "corloc", "leaked_objectness", "source_precision",
                  "source_recall", "target_precision", "target_recall", "source_mined",
                  "target_mined"});
  for (const auto& it : report.iterations) {
    std::vector<std::string> row;
    row.push_back(std::to_string(it.iteration));
    row.push_back(fmt(it.map));
    row.push_back(fmt(it.corloc));
    row.push_back(fmt(it.leaked_mean_objectness));
    if (it.mining) {
      row.push_back(fmt(it.mining->source_precision));
      row.push_back(fmt(it.mining->source_recall));
      row.push_back(fmt(it.mining->target_precision));
      row.push_back(fmt(it.mining->target_recall));
      row.push_back(std::to_string(it.mining->source_mined));
      row.push_back(std::to_string(it.mining->target_mined));
    } else {
      for (int k = 0; k < 6; ++k) row.push_back("");
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

std::string render_report_csv(const RunReport& report) {
  std::string out;
  for (const auto& row : report_rows(report)) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += row[i];
    }
    out += '\n';
  }
  return out;
}

std::string render_report_md(const RunReport& report) {
  const auto rows = report_rows(report);
  std::string out;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out += '|';
    for (const auto& cell : rows[r]) {
      out += ' ';
      out += cell.empty() ? "-" : cell;
      out += " |";
    }
    out += '\n';
    if (r == 0) {
      out += '|';
      for (std::size_t i = 0; i < rows[0].size(); ++i) out += " --- |";
      out += '\n';
    }
  }
  return out;
}

namespace {

World build_world(const LoopConfig& cfg) {
  if (cfg.world_config.empty()) {
    throw ValidationError(
        "loop config: world_config is required (candidate features come from "
        "the world's generative model)");
  }
  const WorldConfig wc = world_config_from_file(cfg.world_config);
  const bool any_dataset = !cfg.source_dataset.empty() ||
                           !cfg.target_train_dataset.empty() ||
                           !cfg.target_test_dataset.empty();
  if (any_dataset) {
    if (cfg.source_dataset.empty() || cfg.target_train_dataset.empty() ||
        cfg.target_test_dataset.empty()) {
      throw ValidationError("loop config: set all three dataset paths or none");
    }
    return World::attach(wc, load_dataset(cfg.source_dataset),
                         load_dataset(cfg.target_train_dataset),
                         load_dataset(cfg.target_test_dataset));
  }
  return World::generate(wc);
}

double leaked_mean_objectness(const World& world, const OcudParams& ocud) {
  double sum = 0.0;
  int count = 0;
  const int nt = world.config().n_target_cats;
  for (const auto& img : world.source_train().images) {
    for (std::size_t k = 0; k < img.hidden_gt.size(); ++k) {
      if (img.hidden_gt[k].category >= nt) continue;
      sum += ocud_score(ocud, world.object_feature(img, static_cast<int>(k)));
      ++count;
    }
  }
  return count > 0 ? sum / count : -1.0;
}

}  // namespace

RunReport run(const LoopConfig& cfg) {
  cfg.validate();
  const World world = build_world(cfg);
  return run(cfg, world);
}

RunReport run(const LoopConfig& cfg, const World& world_in) {
  cfg.validate();

  const World* world = &world_in;
  World subsampled;
  if (cfg.source_fraction < 1.0) {
    subsampled = world_in.with_source_fraction(cfg.source_fraction, cfg.seed);
    world = &subsampled;
  }
  const CandidateSource source = world->candidate_source();

  const Dataset& S = world->source_train();
  const Dataset& T = world->target_train();
  const auto source_views = training_views(S);
  const auto target_views = training_views(T);

  const ProposalConfig proposal_cfg{cfg.proposal_nms_iou, cfg.max_proposals};
  const DetectConfig detect_cfg{cfg.eta, cfg.nms_iou, cfg.per_category_nms,
                                cfg.fuse_before_nms, proposal_cfg};
  const MiningConfig mining_cfg{cfg.tau, cfg.overlap_o};

  RunReport report;
  report.config = cfg;
  report.world = world->config();

  auto make_ocud_cfg = [&](int iteration, std::optional<OcudParams> warm) {
    OcudTrainConfig c;
    c.steps = iteration == 0 ? cfg.ocud_initial_steps : cfg.ocud_refine_steps;
    c.lr = cfg.ocud_lr;
    c.lr_drop_at = cfg.lr_drop_at;
    c.match_iou = cfg.match_iou;
    c.neg_pos_ratio = cfg.neg_pos_ratio;
    c.warm_start = std::move(warm);
    c.seed = derive_seed(cfg.seed, "ocud", static_cast<std::uint64_t>(iteration));
    report.ocud_seeds.push_back(c.seed);
    return c;
  };
  auto make_mil_cfg = [&](int iteration, std::optional<MilParams> warm) {
    MilTrainConfig c;
    c.steps = iteration == 0 ? cfg.mil_initial_steps : cfg.mil_refine_steps;
    c.lr = cfg.mil_lr;
    c.lr_drop_at = cfg.lr_drop_at;
    c.num_categories = world->config().n_target_cats;
    c.beta = cfg.beta;
    c.lambda = cfg.lambda;
    c.warm_start = std::move(warm);
    c.seed = derive_seed(cfg.seed, "mil", static_cast<std::uint64_t>(iteration));
    report.mil_seeds.push_back(c.seed);
    c.proposals = proposal_cfg;
    return c;
  };

  auto evaluate = [&](int iteration, const OcudParams& ocud, const MilParams& mil,
                      const TrainTrace& ocud_trace, const TrainTrace& mil_trace,
                      std::optional<MiningReport> mining) {
    auto detector = [&](const ImageView& view) {
      return detect_target(mil, ocud, view, source, detect_cfg);
    };
    DetectionMap test_dets;
    for (const auto& img : world->target_test().images) {
      auto d = detector(training_view(img));
      if (!d.empty()) test_dets.emplace(img.id, std::move(d));
    }
    const MapResult mr = evaluate_map(test_dets, world->target_test(), 0.5, cfg.ap_method);
    const CorlocResult cr = evaluate_corloc(detector, T, 0.5);

    IterationReport it;
    it.iteration = iteration;
    it.map = mr.map;
    it.per_category_ap = mr.per_category_ap;
    it.corloc = cr.mean;
    it.per_category_corloc = cr.per_category;
    it.leaked_mean_objectness = leaked_mean_objectness(*world, ocud);
    it.ocud_loss = ocud_trace.epoch_loss;
    it.mil_loss = mil_trace.epoch_loss;
    it.mining = std::move(mining);
    report.iterations.push_back(std::move(it));
  };

  // Iteration 0: one-step transfer baseline.
  TrainTrace ocud_trace, mil_trace;
  OcudParams ocud = train_ocud(source_views, source, make_ocud_cfg(0, std::nullopt),
                               &ocud_trace);
  MilParams mil = train_mil(target_views, ocud, source, make_mil_cfg(0, std::nullopt),
                            &mil_trace);
  evaluate(0, ocud, mil, ocud_trace, mil_trace, std::nullopt);

  for (int k = 1; k <= cfg.refinements; ++k) {
    auto detector = [&](const ImageView& view) {
      return detect_target(mil, ocud, view, source, detect_cfg);
    };
    // Mining starts from the original S and T every round.
    const MinedMap mined_src = mine_source(source_views, DetectorFn(detector), mining_cfg);
    const MinedMap mined_tgt = mine_target(target_views, DetectorFn(detector), mining_cfg);

    MiningReport mrep;
    {
      std::map<std::string, std::vector<Annotation>> src_gt, tgt_gt;
      const int nt = world->config().n_target_cats;
      for (const auto& img : S.images) {
        std::vector<Annotation> leaked;
        for (const auto& a : img.hidden_gt) {
          if (a.category < nt) leaked.push_back(a);
        }
        if (!leaked.empty()) src_gt.emplace(img.id, std::move(leaked));
      }
      for (const auto& img : T.images) {
        if (!img.hidden_gt.empty()) tgt_gt.emplace(img.id, img.hidden_gt);
      }
      const MiningStats ss = mining_stats(mined_src, src_gt, 0.5);
      const MiningStats ts = mining_stats(mined_tgt, tgt_gt, 0.5);
      mrep = MiningReport{ss.precision, ss.recall, ts.precision, ts.recall,
                          ss.mined,     ts.mined};
    }

    const Dataset s_plus = augment(S, mined_src);
    const Dataset t_plus = augment(T, mined_tgt);

    std::vector<ImageView> refine_views;
    if (cfg.source_in_refinement) {
      for (const auto& img : s_plus.images) refine_views.push_back(training_view(img));
    }
    for (const auto& img : t_plus.images) refine_views.push_back(training_view(img));

    ocud_trace = TrainTrace{};
    mil_trace = TrainTrace{};
    ocud = train_ocud(refine_views, source, make_ocud_cfg(k, ocud), &ocud_trace);
    mil = train_mil(target_views, ocud, source,
                    make_mil_cfg(k, cfg.mil_warm_start
                                        ? std::optional<MilParams>(mil)
                                        : std::nullopt),
                    &mil_trace);
    evaluate(k, ocud, mil, ocud_trace, mil_trace, mrep);
  }
  return report;
}

std::string_view to_string(AblationAxis axis) {
  switch (axis) {
    case AblationAxis::tau: return "tau";
    case AblationAxis::beta: return "beta";
    case AblationAxis::lambda: return "lambda";
    case AblationAxis::eta: return "eta";
    case AblationAxis::source_inclusion: return "source_inclusion";
    default: return "source_fraction";
  }
}

AblationAxis ablation_axis_from_string(std::string_view s) {
  if (s == "tau") return AblationAxis::tau;
  if (s == "beta") return AblationAxis::beta;
  if (s == "lambda") return AblationAxis::lambda;
  if (s == "eta") return AblationAxis::eta;
  if (s == "source_inclusion") return AblationAxis::source_inclusion;
  if (s == "source_fraction") return AblationAxis::source_fraction;
  throw ValidationError("unknown ablation axis '" + std::string(s) + "'");
}

std::vector<RunReport> run_ablation(const LoopConfig& cfg, const World& world,
                                    AblationAxis axis, const std::vector<double>& values) {
  if (values.empty()) throw ValidationError("ablation: no values given");
  std::vector<RunReport> reports;
  reports.reserve(values.size());
  for (double v : values) {
    LoopConfig c = cfg;
    switch (axis) {
      case AblationAxis::tau: c.tau = v; break;
      case AblationAxis::beta: c.beta = v; break;
      case AblationAxis::lambda: c.lambda = v; break;
      case AblationAxis::eta: c.eta = v; break;
      case AblationAxis::source_inclusion: c.source_in_refinement = v != 0.0; break;
      case AblationAxis::source_fraction: c.source_fraction = v; break;
    }
    reports.push_back(run(c, world));
  }
  return reports;
}

std::vector<RunReport> run_ablation(const LoopConfig& cfg, AblationAxis axis,
                                    const std::vector<double>& values) {
  cfg.validate();
  const World world = build_world(cfg);
  return run_ablation(cfg, world, axis, values);
}

}  // namespace wsod
