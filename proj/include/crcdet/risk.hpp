#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "crcdet/detections.hpp"
#include "crcdet/pairing.hpp"

namespace crcdet {

/// Candidates of one scan whose confidence is at least `lambda`.
struct PredictionSet {
  std::string scan_id;
  double lambda = 0.0;
  std::vector<CandidateBox> members;
};

struct ScanMetrics {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  double fnr_loss = 0.0;
  std::size_t set_size = 0;

  friend bool operator==(const ScanMetrics&, const ScanMetrics&) = default;
};

PredictionSet prediction_set(const ScanRecord& scan, double lambda);

/// Per-scan false-negative ratio, 1 - TP/(TP+FN). A scan without ground truth
/// has loss 0.
double fnr_loss(const ScanRecord& scan, double lambda);
double fnr_loss(const Outcomes& o);

/// Pairs the scan against its prediction set at `lambda` from scratch.
ScanMetrics scan_metrics(const ScanRecord& scan, double lambda);

/// Everything needed to evaluate a scan at any threshold without re-pairing.
/// Pairing only changes where a candidate overlapping some nodule enters the
/// prediction set, so TP is stored at those confidences only.
class ScanProfile {
 public:
  explicit ScanProfile(const ScanRecord& scan);

  const std::string& scan_id() const { return scan_id_; }
  std::size_t truth_count() const { return truth_count_; }
  /// All candidate confidences, ascending.
  const std::vector<double>& confidences() const { return confidences_; }
  /// Confidences at which TP can change, ascending.
  const std::vector<double>& breakpoints() const { return breakpoints_; }

  std::size_t true_positives(double lambda) const;
  std::size_t set_size(double lambda) const;
  ScanMetrics metrics(double lambda) const;
  double loss(double lambda) const;

 private:
  std::string scan_id_;
  std::size_t truth_count_ = 0;
  std::vector<double> confidences_;
  std::vector<double> breakpoints_;
  std::vector<std::size_t> tp_at_breakpoint_;
};

std::vector<ScanProfile> profile_dataset(const Dataset& d);

/// Threshold above every admissible confidence; selects the empty set.
double select_nothing_lambda();

/// Empirical risk as a step function of lambda over a calibration set.
struct RiskCurve {
  /// Ascending: 0, every distinct candidate confidence, then a sentinel above 1.
  std::vector<double> grid;
  /// Mean per-scan FNR at each grid point.
  std::vector<double> empirical_risk;
  /// Pooled sensitivity (sum TP / sum (TP+FN)) at each grid point.
  std::vector<double> pooled_sensitivity;
  std::size_t n = 0;
  /// Nodule count over all scans.
  std::size_t nodules = 0;
};

RiskCurve risk_curve(std::span<const ScanProfile> calibration);
RiskCurve risk_curve(const Dataset& calibration);

/// Sorted distinct confidences plus 0 and the select-nothing sentinel.
std::vector<double> lambda_grid(std::span<const ScanProfile> scans);

struct AggregateMetrics {
  double sensitivity_froc = 0.0;
  double sensitivity_prc = 0.0;
  double precision_prc = 0.0;
  double false_positives_froc = 0.0;
  double efficiency = 0.0;
  double fn_per_scan = 0.0;
  /// Scans whose prediction set was empty (precision taken as 1).
  std::size_t empty_prediction_sets = 0;
  std::size_t n = 0;
};

/// Averages per-scan metrics at a fixed threshold.
AggregateMetrics aggregate_metrics(std::span<const ScanMetrics> per_scan);
AggregateMetrics aggregate_metrics(std::span<const ScanProfile> test, double lambda);
AggregateMetrics aggregate_metrics(const Dataset& test, double lambda);

}  // namespace crcdet
