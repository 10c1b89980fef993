#include "crcdet/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "crcdet/errors.hpp"
#include "crcdet/json_io.hpp"
#include "crcdet/random.hpp"

namespace crcdet {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string full_precision(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  return out;
}

}  // namespace

std::vector<StrategySpec> default_strategies() {
  return {{Strategy::Naive, 0.5, 0.9, 0.1},
          {Strategy::Froc, 0.5, 0.9, 0.1},
          {Strategy::Crc, 0.5, 0.9, 0.1}};
}

void ExperimentPlan::validate() const {
  if (repetitions < 1) throw ConfigError("plan: repetitions must be >= 1");
  if (strategies.empty()) throw ConfigError("plan: at least one strategy is required");
  if (datasets.empty()) throw ConfigError("plan: at least one dataset is required");
  if (histogram_bins < 1) throw ConfigError("plan: histogram_bins must be >= 1");
  std::vector<std::string> names;
  for (const auto& d : datasets) {
    if (d.name.empty()) throw ConfigError("plan: dataset name must not be empty");
    if (std::find(names.begin(), names.end(), d.name) != names.end()) {
      throw ConfigError("plan: duplicate dataset name '" + d.name + "'");
    }
    names.push_back(d.name);
    if (d.min_consensus && *d.min_consensus < 1) throw ConfigError("plan: min_consensus must be >= 1");
  }
  for (const auto& s : strategies) {
    if (s.kind == Strategy::Crc && !(s.alpha > 0.0 && s.alpha < 1.0)) {
      throw ConfigError("plan: alpha must lie in (0, 1)");
    }
    if (s.kind == Strategy::Naive && !(s.fixed_lambda >= 0.0 && s.fixed_lambda <= 1.0)) {
      throw ConfigError("plan: fixed_lambda must lie in [0, 1]");
    }
    if (s.kind == Strategy::Froc && !(s.target_sensitivity >= 0.0 && s.target_sensitivity <= 1.0)) {
      throw ConfigError("plan: target_sensitivity must lie in [0, 1]");
    }
  }
}

ExperimentPlan parse_plan(const std::string& text, const fs::path& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("plan is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("plan must be a JSON object");

  ExperimentPlan plan;
  try {
    if (j.contains("repetitions")) plan.repetitions = j.at("repetitions").get<std::size_t>();
    if (j.contains("base_seed")) plan.base_seed = j.at("base_seed").get<std::uint64_t>();
    if (j.contains("histogram_bins")) plan.histogram_bins = j.at("histogram_bins").get<std::size_t>();
    if (j.contains("workers")) plan.workers = j.at("workers").get<std::size_t>();
    if (j.contains("output_dir")) {
      fs::path out = j.at("output_dir").get<std::string>();
      plan.output_dir = out.is_relative() && !base_dir.empty() ? base_dir / out : out;
    }
    if (j.contains("strategies")) {
      for (const auto& s : j.at("strategies")) plan.strategies.push_back(strategy_from_json(s));
    } else {
      plan.strategies = default_strategies();
    }

    if (!j.contains("datasets") || !j.at("datasets").is_array()) {
      throw ConfigError("plan: 'datasets' must be an array");
    }
    for (const auto& d : j.at("datasets")) {
      if (!d.is_object() || !d.contains("name")) throw ConfigError("plan: every dataset needs a 'name'");
      DatasetSource src;
      src.name = d.at("name").get<std::string>();
      const bool has_path = d.contains("path");
      const bool has_gen = d.contains("generator");
      if (has_path == has_gen) {
        throw ConfigError("plan: dataset '" + src.name + "' needs exactly one of 'path' or 'generator'");
      }
      if (has_path) {
        fs::path p = d.at("path").get<std::string>();
        src.source = p.is_relative() && !base_dir.empty() ? base_dir / p : p;
      } else {
        GeneratorConfig cfg;
        from_json(d.at("generator"), cfg);
        src.source = cfg;
      }
      if (d.contains("nms_threshold")) src.nms_threshold = d.at("nms_threshold").get<double>();
      if (d.contains("consensus_levels")) {
        for (const auto& level : d.at("consensus_levels")) {
          DatasetSource expanded = src;
          expanded.min_consensus = level.get<int>();
          expanded.name = src.name + "-" + std::to_string(*expanded.min_consensus);
          plan.datasets.push_back(std::move(expanded));
        }
      } else {
        if (d.contains("min_consensus")) src.min_consensus = d.at("min_consensus").get<int>();
        plan.datasets.push_back(std::move(src));
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("plan: ") + e.what());
  }
  plan.validate();
  return plan;
}

ExperimentPlan load_plan(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_plan(buf.str(), path.parent_path());
}

PreparedDataset prepare_dataset(std::string name, Dataset data) {
  PreparedDataset out;
  out.name = std::move(name);
  out.profiles = profile_dataset(data);
  out.data = std::move(data);
  return out;
}

PreparedDataset prepare_dataset(const DatasetSource& source) {
  Dataset data;
  if (const auto* path = std::get_if<fs::path>(&source.source)) {
    LoadOptions opts;
    opts.nms_threshold = source.nms_threshold;
    data = load_dataset(*path, opts);
  } else {
    data = generate(std::get<GeneratorConfig>(source.source));
    if (source.nms_threshold) {
      for (auto& s : data.scans) s.candidates = nms_filter(s.candidates, *source.nms_threshold);
    }
  }
  if (source.min_consensus) data = filter_consensus(data, *source.min_consensus);
  return prepare_dataset(source.name, std::move(data));
}

std::uint64_t trial_seed(std::uint64_t base_seed, std::size_t dataset_index, std::size_t rep) {
  return derive_seed(base_seed, dataset_index, rep);
}

TrialOutcome run_trial(const PreparedDataset& dataset, std::size_t dataset_index, std::size_t rep,
                       const std::vector<StrategySpec>& strategies, std::uint64_t base_seed) {
  TrialOutcome outcome;
  auto fail_all = [&](const std::string& message) {
    for (const auto& s : strategies) outcome.failures.push_back({dataset.name, s.kind, rep, message});
  };

  std::vector<ScanProfile> cal, test;
  try {
    const auto [cal_idx, test_idx] =
        split_indices(dataset.profiles.size(), trial_seed(base_seed, dataset_index, rep));
    cal.reserve(cal_idx.size());
    test.reserve(test_idx.size());
    for (auto i : cal_idx) cal.push_back(dataset.profiles[i]);
    for (auto i : test_idx) test.push_back(dataset.profiles[i]);
  } catch (const std::exception& e) {
    fail_all(e.what());
    return outcome;
  }

  std::optional<RiskCurve> curve;
  for (const auto& spec : strategies) {
    try {
      if (spec.kind != Strategy::Naive && !curve) curve = risk_curve(cal);
      const CalibrationResult result =
          spec.kind == Strategy::Naive ? calibrate_naive(spec.fixed_lambda) : calibrate(spec, *curve);
      TrialReport report = evaluate(result, test);
      report.dataset = dataset.name;
      report.rep = rep;
      outcome.reports.push_back(std::move(report));
    } catch (const std::exception& e) {
      outcome.failures.push_back({dataset.name, spec.kind, rep, e.what()});
    }
  }
  return outcome;
}

std::vector<HistogramBin> histogram(const std::vector<double>& values, std::size_t bins) {
  if (values.empty() || bins == 0) return {};
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  if (!(hi > lo)) return {{lo, hi, 1.0}};
  const double width = (hi - lo) / static_cast<double>(bins);
  std::vector<std::size_t> counts(bins, 0);
  for (double v : values) {
    auto k = static_cast<std::size_t>((v - lo) / width);
    ++counts[std::min(k, bins - 1)];
  }
  std::vector<HistogramBin> out(bins);
  const auto total = static_cast<double>(values.size());
  for (std::size_t k = 0; k < bins; ++k) {
    out[k].left = lo + width * static_cast<double>(k);
    out[k].right = k + 1 == bins ? hi : lo + width * static_cast<double>(k + 1);
    out[k].height = static_cast<double>(counts[k]) / total;
  }
  return out;
}

SummaryTable summarize(const std::vector<std::string>& dataset_names,
                       const std::vector<StrategySpec>& strategies,
                       const std::vector<TrialReport>& trials,
                       const std::vector<TrialFailure>& failures, std::size_t histogram_bins) {
  SummaryTable table;
  for (const auto& name : dataset_names) {
    for (const auto& spec : strategies) {
      std::vector<const TrialReport*> rows;
      for (const auto& t : trials) {
        if (t.dataset == name && t.strategy == spec.kind) rows.push_back(&t);
      }
      SummaryRow row;
      row.dataset = name;
      row.strategy = spec.kind;
      row.trials = rows.size();
      row.failures = static_cast<std::size_t>(std::count_if(
          failures.begin(), failures.end(),
          [&](const TrialFailure& f) { return f.dataset == name && f.strategy == spec.kind; }));

      std::vector<std::vector<double>> columns(std::size(kHistogramMetrics));
      for (const auto* t : rows) {
        const double values[] = {t->lambda_hat, t->sensitivity, t->precision,
                                 t->efficiency, t->fn,          t->fp};
        for (std::size_t m = 0; m < columns.size(); ++m) columns[m].push_back(values[m]);
        if (t->infeasible) ++row.infeasible;
      }
      auto mean = [](const std::vector<double>& v) {
        if (v.empty()) return std::nan("");
        double s = 0.0;
        for (double x : v) s += x;
        return s / static_cast<double>(v.size());
      };
      row.lambda_hat = mean(columns[0]);
      row.sensitivity = mean(columns[1]);
      row.precision = mean(columns[2]);
      row.efficiency = mean(columns[3]);
      row.fn = mean(columns[4]);
      row.fp = mean(columns[5]);
      if (columns[1].size() > 1) {
        double ss = 0.0;
        for (double x : columns[1]) ss += (x - row.sensitivity) * (x - row.sensitivity);
        const auto n = static_cast<double>(columns[1].size());
        row.sensitivity_se = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
      }
      table.rows.push_back(row);

      for (std::size_t m = 0; m < columns.size(); ++m) {
        table.histograms.push_back({name, spec.kind, kHistogramMetrics[m], histogram(columns[m], histogram_bins)});
      }
    }
  }
  return table;
}

ExperimentResult run_trials(const ExperimentPlan& plan, const std::vector<PreparedDataset>& datasets) {
  plan.validate();
  const std::size_t units = datasets.size() * plan.repetitions;
  std::vector<TrialOutcome> outcomes(units);

  std::size_t workers = plan.workers;
  if (workers == 0) workers = std::max<std::size_t>(1, std::thread::hardware_concurrency());
  workers = std::min(workers, std::max<std::size_t>(units, 1));

  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t u = next.fetch_add(1); u < units; u = next.fetch_add(1)) {
      const std::size_t d = u / plan.repetitions;
      const std::size_t rep = u % plan.repetitions;
      outcomes[u] = run_trial(datasets[d], d, rep, plan.strategies, plan.base_seed);
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  }

  ExperimentResult result;
  for (const auto& d : datasets) result.dataset_names.push_back(d.name);
  for (auto& o : outcomes) {
    for (auto& r : o.reports) result.trials.push_back(std::move(r));
    for (auto& f : o.failures) result.failures.push_back(std::move(f));
  }
  result.summary = summarize(result.dataset_names, plan.strategies, result.trials, result.failures,
                             plan.histogram_bins);
  return result;
}

void write_trials_csv(std::ostream& out, const std::vector<TrialReport>& trials) {
  out << kTrialsHeader << '\n';
  for (const auto& t : trials) {
    out << t.dataset << ',' << to_string(t.strategy) << ',' << t.rep << ',' << fixed6(t.lambda_hat)
        << ',' << fixed6(t.sensitivity) << ',' << fixed6(t.precision) << ','
        << fixed6(t.efficiency) << ',' << fixed6(t.fn) << ',' << fixed6(t.fp) << ','
        << (t.infeasible ? 1 : 0) << '\n';
  }
}

void write_summary_csv(std::ostream& out, const SummaryTable& table) {
  out << kSummaryHeader << '\n';
  for (const auto& r : table.rows) {
    out << r.dataset << ',' << to_string(r.strategy) << ',' << fixed6(r.sensitivity) << ','
        << fixed6(r.precision) << ',' << fixed6(r.efficiency) << ',' << fixed6(r.fn) << ','
        << fixed6(r.fp) << ',' << fixed6(r.lambda_hat) << ',' << fixed6(r.sensitivity_se) << ','
        << r.trials << ',' << r.failures << ',' << r.infeasible << '\n';
  }
}

void write_histograms_csv(std::ostream& out, const SummaryTable& table) {
  out << kHistogramHeader << '\n';
  for (const auto& h : table.histograms) {
    for (const auto& b : h.bins) {
      out << h.dataset << ',' << to_string(h.strategy) << ',' << h.metric << ','
          << full_precision(b.left) << ',' << full_precision(b.right) << ','
          << full_precision(b.height) << '\n';
    }
  }
}

void write_failures_csv(std::ostream& out, const std::vector<TrialFailure>& failures) {
  out << "dataset,strategy,rep,message\n";
  for (const auto& f : failures) {
    std::string msg = f.message;
    std::replace(msg.begin(), msg.end(), '"', '\'');
    out << f.dataset << ',' << to_string(f.strategy) << ',' << f.rep << ",\"" << msg << "\"\n";
  }
}

void write_outputs(const ExperimentPlan& plan, const std::vector<PreparedDataset>& datasets,
                   const ExperimentResult& result) {
  fs::create_directories(plan.output_dir);
  {
    auto out = open_output(plan.output_dir / "trials.csv");
    write_trials_csv(out, result.trials);
  }
  {
    auto out = open_output(plan.output_dir / "summary.csv");
    write_summary_csv(out, result.summary);
  }
  {
    auto out = open_output(plan.output_dir / "histograms.csv");
    write_histograms_csv(out, result.summary);
  }
  {
    auto out = open_output(plan.output_dir / "failures.csv");
    write_failures_csv(out, result.failures);
  }
  {
    auto out = open_output(plan.output_dir / "datasets.csv");
    out << "dataset,scans,nodules,candidates\n";
    for (const auto& d : datasets) {
      std::size_t candidates = 0;
      for (const auto& s : d.data.scans) candidates += s.candidates.size();
      out << d.name << ',' << d.data.size() << ',' << d.data.nodule_count() << ',' << candidates << '\n';
    }
  }
}

SummaryTable run_experiment(const ExperimentPlan& plan) {
  plan.validate();
  std::vector<PreparedDataset> datasets;
  datasets.reserve(plan.datasets.size());
  for (const auto& src : plan.datasets) datasets.push_back(prepare_dataset(src));
  auto result = run_trials(plan, datasets);
  write_outputs(plan, datasets, result);
  return std::move(result.summary);
}

CurveOutput emit_curve(const Dataset& dataset, std::uint64_t seed,
                       const std::vector<StrategySpec>& strategies) {
  if (dataset.empty()) throw std::invalid_argument("emit_curve: empty dataset");
  const auto profiles = profile_dataset(dataset);
  const auto [cal_idx, test_idx] = split_indices(profiles.size(), seed);
  std::vector<ScanProfile> cal, test;
  for (auto i : cal_idx) cal.push_back(profiles[i]);
  for (auto i : test_idx) test.push_back(profiles[i]);

  CurveOutput out;
  for (double lambda : lambda_grid(test)) {
    const auto m = aggregate_metrics(test, lambda);
    out.points.push_back({lambda, m.sensitivity_prc, m.false_positives_froc});
  }
  const auto curve = risk_curve(cal);
  for (const auto& spec : strategies) {
    const auto result = calibrate(spec, curve);
    const auto m = aggregate_metrics(test, result.lambda_hat);
    out.markers.push_back(
        {spec.kind, result.lambda_hat, m.sensitivity_prc, m.false_positives_froc, result.infeasible});
  }
  return out;
}

void write_curve_csv(std::ostream& out, const CurveOutput& curve) {
  out << kCurveHeader << '\n';
  for (const auto& p : curve.points) {
    out << full_precision(p.lambda) << ',' << fixed6(p.sensitivity_prc) << ',' << fixed6(p.fp_froc) << '\n';
  }
}

void write_curve_annotations_csv(std::ostream& out, const CurveOutput& curve) {
  out << kCurveAnnotationHeader << '\n';
  for (const auto& m : curve.markers) {
    out << to_string(m.strategy) << ',' << full_precision(m.lambda_hat) << ','
        << fixed6(m.sensitivity_prc) << ',' << fixed6(m.fp_froc) << ',' << (m.infeasible ? 1 : 0)
        << '\n';
  }
}

fs::path curve_annotations_path(const fs::path& curve_path) {
  fs::path out = curve_path;
  out.replace_filename(curve_path.stem().string() + "_annotations.csv");
  return out;
}

}  // namespace crcdet
