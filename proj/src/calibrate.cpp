#include "crcdet/calibrate.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "crcdet/errors.hpp"

namespace crcdet {

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::Naive: return "Naive";
    case Strategy::Froc: return "FROC";
    case Strategy::Crc: return "CRC";
  }
  return "?";
}

Strategy parse_strategy(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "naive") return Strategy::Naive;
  if (lower == "froc") return Strategy::Froc;
  if (lower == "crc") return Strategy::Crc;
  throw ConfigError("unknown strategy '" + std::string(name) + "' (expected naive, froc or crc)");
}

double corrected_risk(std::size_t n, double empirical_risk) {
  const auto nn = static_cast<double>(n);
  return nn / (nn + 1.0) * empirical_risk + 1.0 / (nn + 1.0);
}

CalibrationResult calibrate_naive(double fixed_lambda) {
  if (!(fixed_lambda >= 0.0 && fixed_lambda <= 1.0)) {
    throw ConfigError("fixed_lambda must lie in [0, 1]");
  }
  CalibrationResult r;
  r.strategy = Strategy::Naive;
  r.lambda_hat = fixed_lambda;
  r.achieved_calibration_risk = std::numeric_limits<double>::quiet_NaN();
  return r;
}

namespace {

double risk_at_zero(const RiskCurve& curve) {
  // grid[0] is always 0.
  return curve.empirical_risk.front();
}

}  // namespace

CalibrationResult calibrate_froc(const RiskCurve& curve, double target_sensitivity) {
  if (!(target_sensitivity >= 0.0 && target_sensitivity <= 1.0)) {
    throw ConfigError("target_sensitivity must lie in [0, 1]");
  }
  if (curve.grid.empty()) throw std::invalid_argument("calibrate_froc: empty risk curve");
  CalibrationResult r;
  r.strategy = Strategy::Froc;
  r.target_sensitivity = target_sensitivity;
  r.n = curve.n;
  std::optional<std::size_t> best;
  for (std::size_t g = curve.grid.size(); g-- > 0;) {
    if (curve.pooled_sensitivity[g] >= target_sensitivity) {
      best = g;
      break;
    }
  }
  if (best) {
    r.lambda_hat = curve.grid[*best];
    r.achieved_calibration_risk = curve.empirical_risk[*best];
  } else {
    r.infeasible = true;
    r.lambda_hat = 0.0;
    r.achieved_calibration_risk = risk_at_zero(curve);
  }
  return r;
}

CalibrationResult calibrate_crc(const RiskCurve& curve, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
  if (curve.grid.empty()) throw std::invalid_argument("calibrate_crc: empty risk curve");
  CalibrationResult r;
  r.strategy = Strategy::Crc;
  r.alpha = alpha;
  r.n = curve.n;
  std::optional<std::size_t> best;
  for (std::size_t g = curve.grid.size(); g-- > 0;) {
    if (corrected_risk(curve.n, curve.empirical_risk[g]) <= alpha) {
      best = g;
      break;
    }
  }
  if (best) {
    r.lambda_hat = curve.grid[*best];
    r.achieved_calibration_risk = curve.empirical_risk[*best];
  } else {
    r.infeasible = true;
    r.lambda_hat = 0.0;
    r.achieved_calibration_risk = risk_at_zero(curve);
  }
  return r;
}

CalibrationResult calibrate_froc(const Dataset& calibration, double target_sensitivity) {
  return calibrate_froc(risk_curve(calibration), target_sensitivity);
}

CalibrationResult calibrate_crc(const Dataset& calibration, double alpha) {
  return calibrate_crc(risk_curve(calibration), alpha);
}

CalibrationResult calibrate(const StrategySpec& spec, const RiskCurve& curve) {
  switch (spec.kind) {
    case Strategy::Naive: return calibrate_naive(spec.fixed_lambda);
    case Strategy::Froc: return calibrate_froc(curve, spec.target_sensitivity);
    case Strategy::Crc: return calibrate_crc(curve, spec.alpha);
  }
  throw std::logic_error("unreachable strategy");
}

namespace {

TrialReport to_report(const CalibrationResult& result, const AggregateMetrics& m) {
  TrialReport t;
  t.strategy = result.strategy;
  t.lambda_hat = result.lambda_hat;
  t.sensitivity = m.sensitivity_prc;
  t.precision = m.precision_prc;
  t.efficiency = m.efficiency;
  t.fn = m.fn_per_scan;
  t.fp = m.false_positives_froc;
  t.infeasible = result.infeasible;
  return t;
}

}  // namespace

TrialReport evaluate(const CalibrationResult& result, std::span<const ScanProfile> test) {
  return to_report(result, aggregate_metrics(test, result.lambda_hat));
}

TrialReport evaluate(const CalibrationResult& result, const Dataset& test) {
  return to_report(result, aggregate_metrics(test, result.lambda_hat));
}

}  // namespace crcdet
