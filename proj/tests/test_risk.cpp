#include <doctest.h>

#include <cmath>
#include <random>

#include "crcdet/risk.hpp"
#include "crcdet/synth.hpp"
#include "oracles.hpp"

using namespace crcdet;
using oracle::cube;

namespace {

/// A scan with `truth` nodules of which the first `found` have a candidate at
/// confidence `conf`, plus `distractors` non-overlapping candidates at 0.1.
ScanRecord detected(const std::string& id, int truth, int found, double conf = 0.8, int distractors = 0) {
  ScanRecord s;
  s.scan_id = id;
  for (int i = 0; i < truth; ++i) {
    s.ground_truth.push_back({cube(20.0 * i, 0, 0, 5), 1});
    if (i < found) s.candidates.push_back({cube(20.0 * i + 1, 0, 0, 5), conf});
  }
  for (int i = 0; i < distractors; ++i) s.candidates.push_back({cube(20.0 * i, 200, 0, 5), 0.1});
  return s;
}

double direct_risk(const Dataset& d, double lambda) {
  double sum = 0.0;
  for (const auto& s : d.scans) sum += fnr_loss(s, lambda);
  return sum / static_cast<double>(d.size());
}

}  // namespace

TEST_CASE("prediction_set examples") {
  ScanRecord s;
  s.scan_id = "p";
  for (double c : {0.2, 0.5, 0.9, 1.0}) s.candidates.push_back({cube(c * 10, 0, 0, 1), c});
  CHECK(prediction_set(s, 0.0).members.size() == 4);
  const auto at1 = prediction_set(s, 1.0);
  REQUIRE(at1.members.size() == 1);
  CHECK(at1.members[0].confidence == 1.0);
  const auto mid = prediction_set(s, 0.5);
  REQUIRE(mid.members.size() == 3);
  CHECK(mid.members[0].confidence == 0.5);
  CHECK(mid.members[1].confidence == 0.9);
  CHECK(mid.lambda == 0.5);
  CHECK(mid.scan_id == "p");
}

TEST_CASE("fnr_loss examples") {
  CHECK(fnr_loss(detected("a", 4, 4), 0.5) == 0.0);
  CHECK(fnr_loss(detected("b", 4, 0, 0.8, 3), 0.0) == 1.0);
  CHECK(fnr_loss(detected("c", 10, 9), 0.5) == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(fnr_loss(detected("d", 0, 0, 0.8, 5), 0.0) == 0.0);
  CHECK(fnr_loss(Outcomes{0, 3, 0}) == 0.0);
}

TEST_CASE("single-candidate step curve") {
  Dataset d;
  d.scans.push_back(detected("one", 1, 1, 0.7));
  const auto profiles = profile_dataset(d);
  CHECK(profiles[0].loss(0.0) == 0.0);
  CHECK(profiles[0].loss(0.7) == 0.0);
  CHECK(profiles[0].loss(std::nextafter(0.7, 1.0)) == 1.0);
  CHECK(profiles[0].loss(1.0) == 1.0);

  const RiskCurve c = risk_curve(d);
  REQUIRE(c.grid == std::vector<double>{0.0, 0.7, select_nothing_lambda()});
  CHECK(c.empirical_risk == std::vector<double>{0.0, 0.0, 1.0});
  CHECK(c.n == 1);
  CHECK(c.nodules == 1);
  CHECK(select_nothing_lambda() > 1.0);
}

TEST_CASE("zero loss at lambda zero on synthetic data") {
  GeneratorConfig cfg;
  cfg.n_scans = 40;
  cfg.seed = 12;
  const RiskCurve c = risk_curve(generate(cfg));
  CHECK(c.grid.front() == 0.0);
  CHECK(c.empirical_risk.front() == 0.0);
  CHECK(c.empirical_risk.back() == 1.0);
}

TEST_CASE("risk curve equals direct recomputation on random instances") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    Dataset d;
    for (int i = 0; i < 5; ++i) {
      d.scans.push_back(oracle::random_scan(rng, 5, 15, 20.0, "s" + std::to_string(i)));
    }
    const RiskCurve c = risk_curve(d);
    REQUIRE(c.grid.size() == c.empirical_risk.size());
    CHECK(std::is_sorted(c.grid.begin(), c.grid.end()));
    CHECK(std::adjacent_find(c.grid.begin(), c.grid.end()) == c.grid.end());
    for (std::size_t g = 0; g < c.grid.size(); ++g) {
      CHECK(c.empirical_risk[g] == direct_risk(d, c.grid[g]));
      if (g > 0) CHECK(c.empirical_risk[g] >= c.empirical_risk[g - 1]);
    }
  }
}

TEST_CASE("profile agrees with pairing from scratch") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const auto s = oracle::random_scan(rng, 6, 20, 20.0, "p");
    const ScanProfile p(s);
    std::vector<double> lambdas{0.0, 1.0, select_nothing_lambda(), u(rng), u(rng)};
    for (const auto& c : s.candidates) {
      lambdas.push_back(c.confidence);
      lambdas.push_back(std::nextafter(c.confidence, 2.0));
    }
    for (double l : lambdas) CHECK(p.metrics(l) == scan_metrics(s, l));
  }
}

TEST_CASE("two-scan worked example") {
  Dataset d;
  d.scans.push_back(detected("first", 10, 9, 0.8, 3));
  d.scans.push_back(detected("second", 2, 1, 0.8, 1));
  const auto m = aggregate_metrics(d, 0.5);
  CHECK(std::abs(m.sensitivity_froc - 10.0 / 12.0) <= 1e-12);
  CHECK(std::abs(m.sensitivity_prc - 0.70) <= 1e-12);
  CHECK(m.false_positives_froc == 0.0);
  CHECK(m.precision_prc == 1.0);
  CHECK(m.efficiency == doctest::Approx(5.0));
  CHECK(m.fn_per_scan == doctest::Approx(1.0));

  const auto at0 = aggregate_metrics(d, 0.0);
  CHECK(at0.false_positives_froc == doctest::Approx(2.0));
  CHECK(at0.efficiency == doctest::Approx(7.0));
  CHECK(at0.precision_prc == doctest::Approx((9.0 / 12.0 + 1.0 / 2.0) / 2.0));
}

TEST_CASE("perfect detector and empty sets") {
  Dataset d;
  d.scans.push_back(detected("a", 3, 3, 1.0));
  d.scans.push_back(detected("b", 5, 5, 1.0));
  const auto m = aggregate_metrics(d, 0.3);
  CHECK(m.sensitivity_froc == 1.0);
  CHECK(m.sensitivity_prc == 1.0);
  CHECK(m.false_positives_froc == 0.0);

  const auto none = aggregate_metrics(d, select_nothing_lambda());
  CHECK(none.sensitivity_froc == 0.0);
  CHECK(none.sensitivity_prc == 0.0);
  CHECK(none.efficiency == 0.0);
  CHECK(none.precision_prc == 1.0);
  CHECK(none.empty_prediction_sets == 2);
}

TEST_CASE("froc sensitivity is nodule-weighted, prc unweighted") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    Dataset d;
    for (int i = 0; i < 6; ++i) {
      d.scans.push_back(oracle::random_scan(rng, 6, 15, 20.0, "w" + std::to_string(i), 1));
    }
    const double lambda = 0.35;
    double tp = 0, truth = 0, per_scan = 0;
    for (const auto& s : d.scans) {
      const auto sm = scan_metrics(s, lambda);
      tp += static_cast<double>(sm.tp);
      truth += static_cast<double>(s.ground_truth.size());
      per_scan += static_cast<double>(sm.tp) / static_cast<double>(s.ground_truth.size());
    }
    const auto m = aggregate_metrics(d, lambda);
    CHECK(m.sensitivity_froc == doctest::Approx(tp / truth));
    CHECK(m.sensitivity_prc == doctest::Approx(per_scan / 6.0));
  }
}

TEST_CASE("set nesting and loss monotonicity") {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 300; ++trial) {
    const auto s = oracle::random_scan(rng, 5, 20, 20.0, "n");
    double a = u(rng), b = u(rng);
    if (a > b) std::swap(a, b);
    const auto big = prediction_set(s, a).members;
    const auto small = prediction_set(s, b).members;
    for (const auto& c : small) {
      CHECK(c.confidence >= b);
      CHECK(std::find(big.begin(), big.end(), c) != big.end());
    }
    CHECK(fnr_loss(s, a) <= fnr_loss(s, b));
  }
}
