// Command-line front end: generate, calibrate, evaluate, experiment, curve.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "crcdet/calibrate.hpp"
#include "crcdet/detections.hpp"
#include "crcdet/errors.hpp"
#include "crcdet/harness.hpp"
#include "crcdet/json_io.hpp"
#include "crcdet/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct DataFlags {
  std::string path;
  std::optional<int> min_consensus;
  std::optional<double> nms;

  void attach(CLI::App* cmd) {
    cmd->add_option("--data", path, "Line-delimited scan record file")->required();
    cmd->add_option("--min-consensus", min_consensus, "Keep nodules marked by at least r annotators")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--nms", nms, "Apply non-maximum suppression with this IoU threshold on load")
        ->check(CLI::Range(0.0, 1.0));
  }

  crcdet::Dataset load() const {
    if (!fs::exists(path)) throw std::runtime_error("input file not found: " + path);
    crcdet::LoadOptions opts;
    opts.nms_threshold = nms;
    auto d = crcdet::load_dataset(path, opts);
    for (const auto& u : crcdet::find_unpairable_truth(d)) {
      std::cerr << "warning: " << path << ": scan '" << u.scan_id << "' ground_truth["
                << u.truth_index << "] overlaps no candidate\n";
    }
    if (min_consensus) {
      auto outcome = crcdet::filter_consensus_counted(d, *min_consensus);
      if (outcome.dropped_scans > 0) {
        std::cerr << "note: consensus filter dropped " << outcome.dropped_scans << " scan(s)\n";
      }
      if (outcome.empty_warning) std::cerr << "warning: no scan survives the consensus filter\n";
      d = std::move(outcome.dataset);
    }
    return d;
  }
};

struct StrategyFlags {
  std::string strategy = "crc";
  double alpha = 0.1;
  double fixed_lambda = 0.5;
  double target = 0.9;

  void attach(CLI::App* cmd, bool with_kind) {
    if (with_kind) {
      cmd->add_option("--strategy", strategy, "naive, froc or crc")
          ->check(CLI::IsMember({"naive", "froc", "crc"}, CLI::ignore_case));
    }
    cmd->add_option("--alpha", alpha, "CRC risk level")->check(CLI::Range(0.0, 1.0));
    cmd->add_option("--lambda", fixed_lambda, "Naive threshold")->check(CLI::Range(0.0, 1.0));
    cmd->add_option("--target", target, "FROC target pooled sensitivity")->check(CLI::Range(0.0, 1.0));
  }

  crcdet::StrategySpec spec() const {
    crcdet::StrategySpec s;
    s.kind = crcdet::parse_strategy(strategy);
    s.alpha = alpha;
    s.fixed_lambda = fixed_lambda;
    s.target_sensitivity = target;
    return s;
  }

  std::vector<crcdet::StrategySpec> all() const {
    auto v = crcdet::default_strategies();
    v[0].fixed_lambda = fixed_lambda;
    v[1].target_sensitivity = target;
    v[2].alpha = alpha;
    return v;
  }
};

void emit_json(const json& j, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << j.dump(2) << '\n';
    return;
  }
  std::ofstream out(out_path);
  if (!out) throw std::runtime_error("cannot write '" + out_path + "'");
  out << j.dump(2) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Conformal FNR calibration for 3D detection candidates"};
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "Write a synthetic multi-annotator record file");
  std::string gen_config, gen_out;
  std::optional<std::uint64_t> gen_seed;
  std::optional<std::size_t> gen_scans;
  std::optional<int> gen_consensus;
  gen->add_option("--config", gen_config, "Generator config (JSON); defaults otherwise");
  gen->add_option("--seed", gen_seed, "Generator seed");
  gen->add_option("--n-scans", gen_scans, "Number of scans before consensus filtering");
  gen->add_option("--min-consensus", gen_consensus, "Keep nodules marked by at least r annotators")
      ->check(CLI::PositiveNumber);
  gen->add_option("--out", gen_out, "Output record file")->required();

  // calibrate
  auto* cal = app.add_subcommand("calibrate", "Estimate a threshold on a calibration record file");
  DataFlags cal_data;
  StrategyFlags cal_strategy;
  std::string cal_out;
  cal_data.attach(cal);
  cal_strategy.attach(cal, true);
  cal->add_option("--out", cal_out, "Write the result JSON here instead of stdout");

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "Test-set metrics at a fixed threshold");
  DataFlags ev_data;
  double ev_lambda = 0.5;
  std::string ev_out;
  ev_data.attach(ev);
  ev->add_option("--lambda", ev_lambda, "Threshold (e.g. a calibrated lambda_hat)")->required();
  ev->add_option("--out", ev_out, "Write the report JSON here instead of stdout");

  // experiment
  auto* ex = app.add_subcommand("experiment", "Run repeated calibration/test splits from a plan");
  std::string ex_plan, ex_out;
  std::optional<std::uint64_t> ex_seed;
  std::optional<std::size_t> ex_reps, ex_workers;
  ex->add_option("--plan", ex_plan, "Experiment plan (JSON)")->required();
  ex->add_option("--seed", ex_seed, "Override the plan's base_seed");
  ex->add_option("--out", ex_out, "Override the plan's output_dir");
  ex->add_option("--reps", ex_reps, "Override the plan's repetitions")->check(CLI::PositiveNumber);
  ex->add_option("--workers", ex_workers, "Worker threads (0 = all cores)");

  // curve
  auto* cv = app.add_subcommand("curve", "Adapted FROC curve on one seeded split");
  DataFlags cv_data;
  StrategyFlags cv_strategy;
  std::uint64_t cv_seed = 0;
  std::string cv_out;
  cv_data.attach(cv);
  cv_strategy.attach(cv, false);
  cv->add_option("--seed", cv_seed, "Split seed");
  cv->add_option("--out", cv_out, "Curve CSV path (annotations go next to it)")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      crcdet::GeneratorConfig cfg;
      if (!gen_config.empty()) {
        std::ifstream in(gen_config);
        if (!in) throw std::runtime_error("input file not found: " + gen_config);
        json j;
        try {
          j = json::parse(in);
        } catch (const json::parse_error& e) {
          throw std::runtime_error(gen_config + ": " + e.what());
        }
        crcdet::from_json(j, cfg);
      }
      if (gen_seed) cfg.seed = *gen_seed;
      if (gen_scans) cfg.n_scans = *gen_scans;
      auto d = crcdet::generate(cfg);
      if (gen_consensus) d = crcdet::filter_consensus(d, *gen_consensus);
      crcdet::save_dataset(d, gen_out);
      std::cout << "wrote " << d.size() << " scans (" << d.nodule_count() << " nodules) to " << gen_out
                << '\n';
    } else if (*cal) {
      const auto d = cal_data.load();
      if (d.empty()) throw std::runtime_error("calibration set is empty");
      const auto spec = cal_strategy.spec();
      const auto result = spec.kind == crcdet::Strategy::Naive
                              ? crcdet::calibrate_naive(spec.fixed_lambda)
                              : crcdet::calibrate(spec, crcdet::risk_curve(d));
      if (result.infeasible) {
        std::cerr << "warning: " << crcdet::to_string(result.strategy)
                  << " requirement unattainable on this calibration set; lambda_hat set to 0\n";
      }
      emit_json(json(result), cal_out);
    } else if (*ev) {
      const auto d = ev_data.load();
      if (d.empty()) throw std::runtime_error("test set is empty");
      auto report = crcdet::evaluate(crcdet::calibrate_naive(ev_lambda), d);
      report.dataset = ev_data.path;
      json j = json(report);
      j.erase("strategy");
      j.erase("rep");
      j.erase("infeasible");
      j["aggregate"] = json(crcdet::aggregate_metrics(d, ev_lambda));
      emit_json(j, ev_out);
    } else if (*ex) {
      if (!fs::exists(ex_plan)) throw std::runtime_error("input file not found: " + ex_plan);
      auto plan = crcdet::load_plan(ex_plan);
      if (ex_seed) plan.base_seed = *ex_seed;
      if (!ex_out.empty()) plan.output_dir = ex_out;
      if (ex_reps) plan.repetitions = *ex_reps;
      if (ex_workers) plan.workers = *ex_workers;
      const auto table = crcdet::run_experiment(plan);
      crcdet::write_summary_csv(std::cout, table);
      std::cerr << "outputs written to " << plan.output_dir.string() << '\n';
    } else if (*cv) {
      const auto d = cv_data.load();
      const auto curve = crcdet::emit_curve(d, cv_seed, cv_strategy.all());
      std::ofstream out(cv_out);
      if (!out) throw std::runtime_error("cannot write '" + cv_out + "'");
      crcdet::write_curve_csv(out, curve);
      const auto ann_path = crcdet::curve_annotations_path(cv_out);
      std::ofstream ann(ann_path);
      if (!ann) throw std::runtime_error("cannot write '" + ann_path.string() + "'");
      crcdet::write_curve_annotations_csv(ann, curve);
      std::cout << "wrote " << curve.points.size() << " curve rows to " << cv_out << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
