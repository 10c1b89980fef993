#include "crcdet/risk.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <stdexcept>

namespace crcdet {

PredictionSet prediction_set(const ScanRecord& scan, double lambda) {
  PredictionSet out;
  out.scan_id = scan.scan_id;
  out.lambda = lambda;
  for (const auto& c : scan.candidates) {
    if (c.confidence >= lambda) out.members.push_back(c);
  }
  return out;
}

double fnr_loss(const Outcomes& o) {
  const std::size_t positives = o.tp + o.fn;
  if (positives == 0) return 0.0;
  return 1.0 - static_cast<double>(o.tp) / static_cast<double>(positives);
}

ScanMetrics scan_metrics(const ScanRecord& scan, double lambda) {
  const auto set = prediction_set(scan, lambda);
  const auto o = count_outcomes(scan.ground_truth, set.members);
  return {o.tp, o.fp, o.fn, fnr_loss(o), set.members.size()};
}

double fnr_loss(const ScanRecord& scan, double lambda) { return scan_metrics(scan, lambda).fnr_loss; }

ScanProfile::ScanProfile(const ScanRecord& scan)
    : scan_id_(scan.scan_id), truth_count_(scan.ground_truth.size()) {
  confidences_.reserve(scan.candidates.size());
  for (const auto& c : scan.candidates) confidences_.push_back(c.confidence);
  std::sort(confidences_.begin(), confidences_.end());

  const auto table = OverlapTable::build(scan.ground_truth, scan.candidates);
  std::vector<std::size_t> relevant;
  for (const auto& edges : table.edges) {
    for (const auto& e : edges) relevant.push_back(e.candidate);
  }
  std::vector<double> levels;
  for (auto c : relevant) levels.push_back(scan.candidates[c].confidence);
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());

  // std::vector<bool> is not contiguous, so the mask lives in a plain array.
  auto active = std::make_unique<bool[]>(scan.candidates.size());
  for (double level : levels) {
    for (std::size_t c = 0; c < scan.candidates.size(); ++c) {
      active[c] = scan.candidates[c].confidence >= level;
    }
    const auto result =
        pair(table, scan.candidates.size(), std::span<const bool>(active.get(), scan.candidates.size()));
    breakpoints_.push_back(level);
    tp_at_breakpoint_.push_back(result.matches.size());
  }
}

std::size_t ScanProfile::true_positives(double lambda) const {
  const auto it = std::lower_bound(breakpoints_.begin(), breakpoints_.end(), lambda);
  if (it == breakpoints_.end()) return 0;
  return tp_at_breakpoint_[static_cast<std::size_t>(it - breakpoints_.begin())];
}

std::size_t ScanProfile::set_size(double lambda) const {
  const auto it = std::lower_bound(confidences_.begin(), confidences_.end(), lambda);
  return static_cast<std::size_t>(confidences_.end() - it);
}

ScanMetrics ScanProfile::metrics(double lambda) const {
  ScanMetrics m;
  m.tp = true_positives(lambda);
  m.set_size = set_size(lambda);
  m.fp = m.set_size - m.tp;
  m.fn = truth_count_ - m.tp;
  m.fnr_loss = fnr_loss(Outcomes{m.tp, m.fp, m.fn});
  return m;
}

double ScanProfile::loss(double lambda) const {
  const std::size_t tp = true_positives(lambda);
  return fnr_loss(Outcomes{tp, 0, truth_count_ - tp});
}

std::vector<ScanProfile> profile_dataset(const Dataset& d) {
  std::vector<ScanProfile> out;
  out.reserve(d.size());
  for (const auto& s : d.scans) out.emplace_back(s);
  return out;
}

double select_nothing_lambda() { return std::nextafter(1.0, 2.0); }

std::vector<double> lambda_grid(std::span<const ScanProfile> scans) {
  std::size_t total = 2;
  for (const auto& s : scans) total += s.confidences().size();
  std::vector<double> grid;
  grid.reserve(total);
  grid.push_back(0.0);
  for (const auto& s : scans) grid.insert(grid.end(), s.confidences().begin(), s.confidences().end());
  grid.push_back(select_nothing_lambda());
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

RiskCurve risk_curve(std::span<const ScanProfile> calibration) {
  if (calibration.empty()) throw std::invalid_argument("risk_curve: empty calibration set");
  RiskCurve curve;
  curve.n = calibration.size();
  curve.grid = lambda_grid(calibration);
  for (const auto& s : calibration) curve.nodules += s.truth_count();

  // Losses are constant on (b_{k-1}, b_k] between consecutive breakpoints, so
  // each plateau is summed once, in calibration order.
  std::vector<double> plateaus;
  for (const auto& s : calibration) plateaus.insert(plateaus.end(), s.breakpoints().begin(), s.breakpoints().end());
  std::sort(plateaus.begin(), plateaus.end());
  plateaus.erase(std::unique(plateaus.begin(), plateaus.end()), plateaus.end());

  const auto n = static_cast<double>(curve.n);
  auto evaluate_at = [&](double lambda, double& risk, double& pooled) {
    double sum = 0.0;
    std::size_t tp_total = 0;
    for (const auto& s : calibration) {
      const std::size_t tp = s.true_positives(lambda);
      tp_total += tp;
      sum += fnr_loss(Outcomes{tp, 0, s.truth_count() - tp});
    }
    risk = sum / n;
    pooled = curve.nodules == 0 ? 1.0
                                : static_cast<double>(tp_total) / static_cast<double>(curve.nodules);
  };

  curve.empirical_risk.resize(curve.grid.size());
  curve.pooled_sensitivity.resize(curve.grid.size());
  std::size_t plateau = 0;
  double risk = 0.0, pooled = 0.0;
  bool fresh = false;
  for (std::size_t g = 0; g < curve.grid.size(); ++g) {
    const double lambda = curve.grid[g];
    while (plateau < plateaus.size() && plateaus[plateau] < lambda) {
      ++plateau;
      fresh = false;
    }
    if (!fresh) {
      evaluate_at(lambda, risk, pooled);
      fresh = true;
    }
    curve.empirical_risk[g] = risk;
    curve.pooled_sensitivity[g] = pooled;
  }
  return curve;
}

RiskCurve risk_curve(const Dataset& calibration) {
  const auto profiles = profile_dataset(calibration);
  return risk_curve(profiles);
}

AggregateMetrics aggregate_metrics(std::span<const ScanMetrics> per_scan) {
  if (per_scan.empty()) throw std::invalid_argument("aggregate_metrics: empty test set");
  AggregateMetrics a;
  a.n = per_scan.size();
  std::size_t tp_total = 0, positives = 0;
  double sens = 0.0, prec = 0.0, fp = 0.0, eff = 0.0, fn = 0.0;
  for (const auto& m : per_scan) {
    tp_total += m.tp;
    positives += m.tp + m.fn;
    const std::size_t scan_positives = m.tp + m.fn;
    sens += scan_positives == 0 ? 1.0
                                : static_cast<double>(m.tp) / static_cast<double>(scan_positives);
    if (m.set_size == 0) {
      prec += 1.0;
      ++a.empty_prediction_sets;
    } else {
      prec += static_cast<double>(m.tp) / static_cast<double>(m.set_size);
    }
    fp += static_cast<double>(m.fp);
    fn += static_cast<double>(m.fn);
    eff += static_cast<double>(m.set_size);
  }
  const auto n = static_cast<double>(a.n);
  a.sensitivity_froc =
      positives == 0 ? 1.0 : static_cast<double>(tp_total) / static_cast<double>(positives);
  a.sensitivity_prc = sens / n;
  a.precision_prc = prec / n;
  a.false_positives_froc = fp / n;
  a.efficiency = eff / n;
  a.fn_per_scan = fn / n;
  return a;
}

AggregateMetrics aggregate_metrics(std::span<const ScanProfile> test, double lambda) {
  std::vector<ScanMetrics> per_scan;
  per_scan.reserve(test.size());
  for (const auto& s : test) per_scan.push_back(s.metrics(lambda));
  return aggregate_metrics(per_scan);
}

AggregateMetrics aggregate_metrics(const Dataset& test, double lambda) {
  std::vector<ScanMetrics> per_scan;
  per_scan.reserve(test.size());
  for (const auto& s : test.scans) per_scan.push_back(scan_metrics(s, lambda));
  return aggregate_metrics(per_scan);
}

}  // namespace crcdet
