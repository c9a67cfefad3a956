#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "wsod/pipeline.hpp"

namespace fs = std::filesystem;
using namespace wsod;

namespace {

std::vector<double> parse_values(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t pos = 0;
      const double v = std::stod(item, &pos);
      if (pos != item.size()) throw std::invalid_argument(item);
      out.push_back(v);
    } catch (const std::exception&) {
      throw ValidationError("--values: '" + item + "' is not a number");
    }
  }
  if (out.empty()) throw ValidationError("--values: empty list");
  return out;
}

void print_run_summary(const RunReport& report) {
  for (const auto& it : report.iterations) {
    std::printf("iteration %d: mAP %.4f  CorLoc %.4f", it.iteration, it.map, it.corloc);
    if (it.mining) {
      std::printf("  mined %d src / %d tgt", it.mining->source_mined,
                  it.mining->target_mined);
    }
    std::printf("\n");
  }
}

int cmd_gen_world(const std::string& cfg_path, const std::string& outdir) {
  const WorldConfig cfg = world_config_from_file(cfg_path);
  const World world = World::generate(cfg);
  fs::create_directories(outdir);
  const auto out = fs::path(outdir);
  save_dataset(world.source_train(), (out / "source_train.json").string());
  save_dataset(world.target_train(), (out / "target_train.json").string());
  save_dataset(world.target_test(), (out / "target_test.json").string());
  std::cout << "wrote " << (out / "source_train.json").string() << ", "
            << (out / "target_train.json").string() << ", "
            << (out / "target_test.json").string() << "\n";
  return 0;
}

int cmd_run(const std::string& cfg_path, const std::string& out_path) {
  const LoopConfig cfg = loop_config_from_file(cfg_path);
  const RunReport report = run(cfg);
  save_report(report, out_path);
  print_run_summary(report);
  std::cout << "report written to " << out_path << "\n";
  return 0;
}

int cmd_ablate(const std::string& cfg_path, const std::string& axis_name,
               const std::string& values_csv, const std::string& out_path) {
  const LoopConfig cfg = loop_config_from_file(cfg_path);
  const AblationAxis axis = ablation_axis_from_string(axis_name);
  const std::vector<double> values = parse_values(values_csv);
  const auto reports = run_ablation(cfg, axis, values);

  nlohmann::json j = nlohmann::json::array();
  for (std::size_t i = 0; i < reports.size(); ++i) {
    nlohmann::json entry;
    entry["axis"] = axis_name;
    entry["value"] = values[i];
    entry["report"] = nlohmann::json::parse(report_to_json_string(reports[i]));
    j.push_back(std::move(entry));
    std::printf("%s = %g: final mAP %.4f\n", axis_name.c_str(), values[i],
                reports[i].iterations.back().map);
  }
  std::ofstream out(out_path);
  if (!out) throw std::runtime_error("cannot write '" + out_path + "'");
  out << j.dump(2) << "\n";
  std::cout << "ablation written to " << out_path << "\n";
  return 0;
}

int cmd_eval(const std::string& dets_path, const std::string& gt_path, double iou,
             const std::string& method_name) {
  const DetectionMap dets = load_detections(dets_path);
  const Dataset gt = load_dataset(gt_path);
  const ApMethod method = ap_method_from_string(method_name);
  const MapResult mr = evaluate_map(dets, gt, iou, method);

  nlohmann::json j;
  j["map"] = mr.map;
  j["per_category_ap"] = mr.per_category_ap;
  if (gt.split == Split::target_train) {
    const CorlocResult cr = evaluate_corloc(dets, gt, iou);
    j["corloc"] = cr.mean;
    j["per_category_corloc"] = cr.per_category;
  }
  std::cout << j.dump(2) << "\n";
  return 0;
}

int cmd_mine(const std::string& dets_path, const std::string& ds_path, double tau,
             double o, const std::string& out_path) {
  const DetectionMap dets = load_detections(dets_path);
  const Dataset ds = load_dataset(ds_path);
  const MiningConfig cfg{tau, o};
  const auto views = training_views(ds);

  MinedMap mined;
  switch (ds.split) {
    case Split::source_train: mined = mine_source(views, dets, cfg); break;
    case Split::target_train: mined = mine_target(views, dets, cfg); break;
    default:
      throw ValidationError("mine: dataset split must be source_train or target_train");
  }
  save_mined(mined, out_path);
  int count = 0;
  for (const auto& [id, anns] : mined) count += static_cast<int>(anns.size());
  std::cout << "mined " << count << " pseudo boxes across " << mined.size()
            << " images -> " << out_path << "\n";
  return 0;
}

int cmd_report(const std::string& report_path, const std::string& format) {
  const RunReport report = load_report(report_path);
  if (format == "csv") {
    std::cout << render_report_csv(report);
  } else if (format == "md") {
    std::cout << render_report_md(report);
  } else {
    throw ValidationError("--format must be csv or md");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Progressive knowledge-transfer harness for weakly supervised detection"};
  app.require_subcommand(1);

  std::string gen_cfg, gen_outdir;
  auto* gen = app.add_subcommand("gen-world", "Generate synthetic datasets");
  gen->add_option("cfg", gen_cfg, "world config file")->required();
  gen->add_option("outdir", gen_outdir, "output directory")->required();

  std::string run_cfg, run_out = "report.json";
  auto* runc = app.add_subcommand("run", "Run the full transfer loop");
  runc->add_option("cfg", run_cfg, "loop config file")->required();
  runc->add_option("--out", run_out, "report output path");

  std::string abl_cfg, abl_axis, abl_values, abl_out = "ablation.json";
  auto* abl = app.add_subcommand("ablate", "Sweep one config axis");
  abl->add_option("cfg", abl_cfg, "loop config file")->required();
  abl->add_option("--axis", abl_axis,
                  "tau|beta|lambda|eta|source_inclusion|source_fraction")
      ->required();
  abl->add_option("--values", abl_values, "comma-separated values")->required();
  abl->add_option("--out", abl_out, "output path");

  std::string eval_dets, eval_gt, eval_method = "eleven_point";
  double eval_iou = 0.5;
  auto* evalc = app.add_subcommand("eval", "Evaluate a detections file");
  evalc->add_option("--dets", eval_dets, "detections json")->required();
  evalc->add_option("--gt", eval_gt, "dataset json with ground truth")->required();
  evalc->add_option("--iou", eval_iou, "matching IoU threshold");
  evalc->add_option("--method", eval_method, "eleven_point|all_points");

  std::string mine_dets, mine_ds, mine_out = "mined.json";
  double mine_tau = 0.8, mine_o = 0.1;
  auto* minec = app.add_subcommand("mine", "Mine pseudo ground truth from detections");
  minec->add_option("--dets", mine_dets, "detections json")->required();
  minec->add_option("--ds", mine_ds, "dataset json")->required();
  minec->add_option("--tau", mine_tau, "score threshold");
  minec->add_option("--o", mine_o, "overlap threshold");
  minec->add_option("--out", mine_out, "output path");

  std::string rep_path, rep_format = "md";
  auto* repc = app.add_subcommand("report", "Render a run report");
  repc->add_option("report", rep_path, "report json")->required();
  repc->add_option("--format", rep_format, "csv|md");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (gen->parsed()) return cmd_gen_world(gen_cfg, gen_outdir);
    if (runc->parsed()) return cmd_run(run_cfg, run_out);
    if (abl->parsed()) return cmd_ablate(abl_cfg, abl_axis, abl_values, abl_out);
    if (evalc->parsed()) return cmd_eval(eval_dets, eval_gt, eval_iou, eval_method);
    if (minec->parsed()) return cmd_mine(mine_dets, mine_ds, mine_tau, mine_o, mine_out);
    if (repc->parsed()) return cmd_report(rep_path, rep_format);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "failure: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
