#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "crcdet/detections.hpp"
#include "crcdet/risk.hpp"

namespace crcdet {

enum class Strategy { Naive, Froc, Crc };

std::string_view to_string(Strategy s);
/// Accepts "naive", "froc", "crc" in any letter case.
Strategy parse_strategy(std::string_view name);

/// A strategy plus the parameter it uses.
struct StrategySpec {
  Strategy kind = Strategy::Crc;
  double fixed_lambda = 0.5;
  double target_sensitivity = 0.9;
  double alpha = 0.1;
};

struct CalibrationResult {
  Strategy strategy = Strategy::Naive;
  double lambda_hat = 0.0;
  std::optional<double> alpha;
  std::optional<double> target_sensitivity;
  /// Calibration scans consulted (0 for Naive).
  std::size_t n = 0;
  /// Empirical calibration risk at lambda_hat (NaN for Naive).
  double achieved_calibration_risk = 0.0;
  /// The strategy's requirement holds at no grid point; lambda_hat fell back to 0.
  bool infeasible = false;
};

/// n/(n+1) * risk + 1/(n+1), the finite-sample corrected risk.
double corrected_risk(std::size_t n, double empirical_risk);

CalibrationResult calibrate_naive(double fixed_lambda = 0.5);

/// Largest grid threshold whose pooled calibration sensitivity reaches the target.
CalibrationResult calibrate_froc(const RiskCurve& curve, double target_sensitivity = 0.9);
CalibrationResult calibrate_froc(const Dataset& calibration, double target_sensitivity = 0.9);

/// Conformal risk control on the per-scan FNR: the largest grid threshold whose
/// corrected empirical risk is at most alpha. When no grid point qualifies
/// (always the case for alpha < 1/(n+1)) the result is flagged infeasible with
/// lambda_hat = 0.
CalibrationResult calibrate_crc(const RiskCurve& curve, double alpha);
CalibrationResult calibrate_crc(const Dataset& calibration, double alpha);

CalibrationResult calibrate(const StrategySpec& spec, const RiskCurve& curve);

/// Test-set metrics at a calibrated threshold. Mirrors one row of the
/// per-trial output.
struct TrialReport {
  std::string dataset;
  Strategy strategy = Strategy::Naive;
  std::size_t rep = 0;
  double lambda_hat = 0.0;
  double sensitivity = 0.0;
  double precision = 0.0;
  double efficiency = 0.0;
  double fn = 0.0;
  double fp = 0.0;
  bool infeasible = false;

  friend bool operator==(const TrialReport&, const TrialReport&) = default;
};

TrialReport evaluate(const CalibrationResult& result, std::span<const ScanProfile> test);
TrialReport evaluate(const CalibrationResult& result, const Dataset& test);

}  // namespace crcdet
