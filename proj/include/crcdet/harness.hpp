#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "crcdet/calibrate.hpp"
#include "crcdet/detections.hpp"
#include "crcdet/risk.hpp"
#include "crcdet/synth.hpp"

namespace crcdet {

/// Where a dataset comes from, plus optional ingest filters.
struct DatasetSource {
  std::string name;
  std::variant<std::filesystem::path, GeneratorConfig> source;
  std::optional<int> min_consensus;
  std::optional<double> nms_threshold;
};

struct ExperimentPlan {
  std::vector<DatasetSource> datasets;
  std::vector<StrategySpec> strategies;
  std::size_t repetitions = 1000;
  std::uint64_t base_seed = 0;
  std::filesystem::path output_dir = "experiment-out";
  std::size_t histogram_bins = 40;
  /// 0 selects the hardware concurrency.
  std::size_t workers = 0;

  void validate() const;
};

/// Reads a JSON plan. Relative dataset paths resolve against the plan's directory.
/// A dataset entry with "consensus_levels": [1, 2, ...] expands into one
/// dataset per level named "<name>-<level>".
ExperimentPlan load_plan(const std::filesystem::path& path);
ExperimentPlan parse_plan(const std::string& text, const std::filesystem::path& base_dir = {});

/// A dataset ready for repeated trials: records plus their pairing profiles.
struct PreparedDataset {
  std::string name;
  Dataset data;
  std::vector<ScanProfile> profiles;
};

PreparedDataset prepare_dataset(const DatasetSource& source);
PreparedDataset prepare_dataset(std::string name, Dataset data);

/// Split seed for a (dataset, repetition) coordinate. Shared by every strategy
/// so all strategies see the same split.
std::uint64_t trial_seed(std::uint64_t base_seed, std::size_t dataset_index, std::size_t rep);

struct TrialFailure {
  std::string dataset;
  Strategy strategy = Strategy::Naive;
  std::size_t rep = 0;
  std::string message;
};

struct TrialOutcome {
  std::vector<TrialReport> reports;
  std::vector<TrialFailure> failures;
};

/// One split of one dataset, calibrated and evaluated with every strategy.
TrialOutcome run_trial(const PreparedDataset& dataset, std::size_t dataset_index, std::size_t rep,
                       const std::vector<StrategySpec>& strategies, std::uint64_t base_seed);

struct HistogramBin {
  double left = 0.0;
  double right = 0.0;
  double height = 0.0;
};

struct Histogram {
  std::string dataset;
  Strategy strategy = Strategy::Naive;
  std::string metric;
  std::vector<HistogramBin> bins;
};

/// Fixed-width bins over [min, max] of the values; heights are fractions of
/// the sample. A constant sample yields one bin of height 1.
std::vector<HistogramBin> histogram(const std::vector<double>& values, std::size_t bins);

struct SummaryRow {
  std::string dataset;
  Strategy strategy = Strategy::Naive;
  std::size_t trials = 0;
  std::size_t failures = 0;
  std::size_t infeasible = 0;
  double lambda_hat = 0.0;
  double sensitivity = 0.0;
  /// Monte Carlo standard error of the mean sensitivity.
  double sensitivity_se = 0.0;
  double precision = 0.0;
  double efficiency = 0.0;
  double fn = 0.0;
  double fp = 0.0;
};

struct SummaryTable {
  std::vector<SummaryRow> rows;
  std::vector<Histogram> histograms;
};

struct ExperimentResult {
  std::vector<std::string> dataset_names;
  /// Ordered by (dataset, rep, strategy).
  std::vector<TrialReport> trials;
  std::vector<TrialFailure> failures;
  SummaryTable summary;
};

inline constexpr const char* kHistogramMetrics[] = {"lambda_hat", "sensitivity", "precision",
                                                    "efficiency", "fn",          "fp"};

/// Means and histograms per (dataset, strategy), in plan order.
SummaryTable summarize(const std::vector<std::string>& dataset_names,
                       const std::vector<StrategySpec>& strategies,
                       const std::vector<TrialReport>& trials,
                       const std::vector<TrialFailure>& failures, std::size_t histogram_bins);

/// Runs every trial on a bounded worker pool. Output does not depend on the
/// worker count.
ExperimentResult run_trials(const ExperimentPlan& plan, const std::vector<PreparedDataset>& datasets);

/// Prepares the datasets, runs all trials and writes trials.csv, summary.csv,
/// histograms.csv, failures.csv and datasets.csv to plan.output_dir.
SummaryTable run_experiment(const ExperimentPlan& plan);

void write_trials_csv(std::ostream& out, const std::vector<TrialReport>& trials);
void write_summary_csv(std::ostream& out, const SummaryTable& table);
void write_histograms_csv(std::ostream& out, const SummaryTable& table);
void write_failures_csv(std::ostream& out, const std::vector<TrialFailure>& failures);
void write_outputs(const ExperimentPlan& plan, const std::vector<PreparedDataset>& datasets,
                   const ExperimentResult& result);

inline constexpr const char* kTrialsHeader =
    "dataset,strategy,rep,lambda_hat,sensitivity,precision,efficiency,fn,fp,infeasible";
inline constexpr const char* kSummaryHeader =
    "dataset,strategy,sensitivity,precision,efficiency,fn,fp,lambda_hat,sensitivity_se,trials,"
    "failures,infeasible";
inline constexpr const char* kHistogramHeader = "dataset,strategy,metric,bin_left,bin_right,height";
inline constexpr const char* kCurveHeader = "lambda,sensitivity_prc,fp_froc";
inline constexpr const char* kCurveAnnotationHeader =
    "strategy,lambda_hat,sensitivity_prc,fp_froc,infeasible";

struct CurvePoint {
  double lambda = 0.0;
  double sensitivity_prc = 0.0;
  double fp_froc = 0.0;
};

struct CurveMarker {
  Strategy strategy = Strategy::Naive;
  double lambda_hat = 0.0;
  double sensitivity_prc = 0.0;
  double fp_froc = 0.0;
  bool infeasible = false;
};

struct CurveOutput {
  std::vector<CurvePoint> points;
  std::vector<CurveMarker> markers;
};

/// Adapted FROC curve on the test half of one seeded split: per-scan averaged
/// sensitivity against false positives per scan, at every threshold of the
/// test set's grid. Markers show where each strategy calibrated on the other
/// half lands.
CurveOutput emit_curve(const Dataset& dataset, std::uint64_t seed,
                       const std::vector<StrategySpec>& strategies);

void write_curve_csv(std::ostream& out, const CurveOutput& curve);
void write_curve_annotations_csv(std::ostream& out, const CurveOutput& curve);
/// Companion file name for a curve path: "curve.csv" -> "curve_annotations.csv".
std::filesystem::path curve_annotations_path(const std::filesystem::path& curve_path);

/// Naive at 0.5, FROC at 0.9, CRC at alpha 0.1.
std::vector<StrategySpec> default_strategies();

}  // namespace crcdet
