#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "crcdet/calibrate.hpp"
#include "crcdet/errors.hpp"
#include "crcdet/synth.hpp"
#include "oracles.hpp"

using namespace crcdet;
using oracle::cube;

namespace {

std::optional<double> froc_oracle(const Dataset& d, double target) {
  std::set<double> grid{0.0, std::nextafter(1.0, 2.0)};
  for (const auto& s : d.scans)
    for (const auto& c : s.candidates) grid.insert(c.confidence);
  std::optional<double> best;
  for (double l : grid) {
    double tp = 0, truth = 0;
    for (const auto& s : d.scans) {
      tp += static_cast<double>(count_outcomes(s.ground_truth, prediction_set(s, l).members).tp);
      truth += static_cast<double>(s.ground_truth.size());
    }
    if (tp / truth >= target) best = l;
  }
  return best;
}

/// One nodule per scan, found by a single candidate at `conf`.
Dataset single_hits(std::size_t n, double conf) {
  Dataset d;
  for (std::size_t i = 0; i < n; ++i) {
    ScanRecord s;
    s.scan_id = "z" + std::to_string(i);
    s.ground_truth.push_back({cube(0, 0, 0, 5), 1});
    s.candidates.push_back({cube(1, 1, 1, 5), conf});
    s.candidates.push_back({cube(50, 50, 50, 5), 0.95});
    d.scans.push_back(s);
  }
  return d;
}

}  // namespace

TEST_CASE("naive strategy") {
  CHECK(calibrate_naive().lambda_hat == 0.5);
  CHECK(calibrate_naive(0.9).lambda_hat == 0.9);
  const auto zero = calibrate_naive(0.0);
  CHECK(zero.lambda_hat == 0.0);
  CHECK(zero.strategy == Strategy::Naive);
  CHECK_FALSE(zero.alpha.has_value());
  CHECK(std::isnan(zero.achieved_calibration_risk));
  CHECK_THROWS_AS(calibrate_naive(1.5), ConfigError);

  GeneratorConfig cfg;
  cfg.n_scans = 20;
  cfg.seed = 1;
  const Dataset d = generate(cfg);
  const auto report = evaluate(zero, d);
  CHECK(report.sensitivity == 1.0);
}

TEST_CASE("strategy names") {
  CHECK(to_string(Strategy::Froc) == "FROC");
  CHECK(parse_strategy("crc") == Strategy::Crc);
  CHECK(parse_strategy("Naive") == Strategy::Naive);
  CHECK_THROWS_AS(parse_strategy("bogus"), ConfigError);
}

TEST_CASE("froc with a perfectly confident detector") {
  const Dataset d = single_hits(5, 1.0);
  const auto r = calibrate_froc(d, 0.9);
  CHECK(r.lambda_hat == 1.0);
  CHECK_FALSE(r.infeasible);
}

TEST_CASE("froc: ten nodules detectable only at low thresholds") {
  // nine nodules detected at 0.4, one at 0.1
  Dataset d;
  for (int i = 0; i < 10; ++i) {
    ScanRecord s;
    s.scan_id = "f" + std::to_string(i);
    s.ground_truth.push_back({cube(0, 0, 0, 5), 1});
    s.candidates.push_back({cube(1, 0, 0, 5), i < 9 ? 0.4 : 0.1});
    s.candidates.push_back({cube(100, 0, 0, 5), 0.8});
    d.scans.push_back(s);
  }
  const auto r = calibrate_froc(d, 0.9);
  CHECK(r.lambda_hat == 0.4);
  CHECK(r.achieved_calibration_risk == doctest::Approx(0.1));
  CHECK(calibrate_froc(d, 0.95).lambda_hat == 0.1);
}

TEST_CASE("froc falls back when the target is unreachable") {
  Dataset d = single_hits(4, 0.6);
  d.scans[0].candidates.erase(d.scans[0].candidates.begin());
  const auto r = calibrate_froc(d, 1.0);
  CHECK(r.infeasible);
  CHECK(r.lambda_hat == 0.0);
}

TEST_CASE("froc matches the grid oracle") {
  std::mt19937_64 rng(404);
  for (int trial = 0; trial < 60; ++trial) {
    const Dataset d = oracle::small_calibration(rng, 15, trial % 2 == 0);
    for (double target : {0.5, 0.8, 0.9}) {
      const auto expected = froc_oracle(d, target);
      const auto r = calibrate_froc(d, target);
      CHECK(r.infeasible == !expected.has_value());
      CHECK(r.lambda_hat == expected.value_or(0.0));
    }
  }
}

TEST_CASE("crc boundary of the finite-sample correction") {
  const Dataset d = single_hits(9, 0.7);
  const auto r = calibrate_crc(d, 0.1);
  CHECK_FALSE(r.infeasible);
  CHECK(r.lambda_hat == 0.7);
  CHECK(r.achieved_calibration_risk == 0.0);
  CHECK(corrected_risk(9, 0.0) <= 0.1);

  // eight scans cannot reach alpha = 0.1
  const auto r8 = calibrate_crc(single_hits(8, 0.7), 0.1);
  CHECK(r8.infeasible);
  CHECK(r8.lambda_hat == 0.0);
}

TEST_CASE("crc with a single scan is infeasible") {
  const auto r = calibrate_crc(single_hits(1, 0.7), 0.1);
  CHECK(r.infeasible);
  CHECK(r.lambda_hat == 0.0);
  CHECK(r.n == 1);
  CHECK(r.alpha == 0.1);
}

TEST_CASE("crc rejects alpha outside (0, 1)") {
  const auto d = single_hits(3, 0.5);
  CHECK_THROWS_AS(calibrate_crc(d, 0.0), ConfigError);
  CHECK_THROWS_AS(calibrate_crc(d, 1.0), ConfigError);
}

TEST_CASE("crc matches the exhaustive grid oracle") {
  std::mt19937_64 rng(1234);
  int feasible = 0;
  for (int trial = 0; trial < 150; ++trial) {
    const Dataset d = oracle::small_calibration(rng, 20, trial % 2 == 0);
    for (double alpha : {0.1, 0.25, 0.5}) {
      const auto expected = oracle::crc_lambda(d, alpha);
      const auto r = calibrate_crc(d, alpha);
      CHECK(r.infeasible == !expected.has_value());
      CHECK(r.lambda_hat == expected.value_or(0.0));
      if (!r.infeasible) {
        ++feasible;
        CHECK(corrected_risk(r.n, r.achieved_calibration_risk) <= alpha);
      }
    }
  }
  CHECK(feasible > 50);
}

TEST_CASE("crc on a 20-scan synthetic calibration set") {
  GeneratorConfig cfg;
  cfg.n_scans = 20;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    cfg.seed = seed;
    const Dataset d = generate(cfg);
    const auto expected = oracle::crc_lambda(d, 0.1);
    REQUIRE(expected.has_value());
    CHECK(calibrate_crc(d, 0.1).lambda_hat == *expected);
  }
}

TEST_CASE("correction makes crc no less conservative than the raw risk") {
  std::mt19937_64 rng(55);
  for (int trial = 0; trial < 50; ++trial) {
    const Dataset d = oracle::small_calibration(rng, 20, trial % 2 == 0);
    const RiskCurve c = risk_curve(d);
    const auto r = calibrate_crc(c, 0.3);
    // largest grid point whose uncorrected risk is at most alpha
    double raw = 0.0;
    for (std::size_t g = 0; g < c.grid.size(); ++g)
      if (c.empirical_risk[g] <= 0.3) raw = c.grid[g];
    CHECK(r.lambda_hat <= raw);
  }
}

TEST_CASE("evaluate matches independent recomputation") {
  std::mt19937_64 rng(9);
  GeneratorConfig cfg;
  cfg.n_scans = 30;
  cfg.seed = 21;
  const Dataset d = generate(cfg);
  const auto profiles = profile_dataset(d);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const auto result = calibrate_naive(u(rng));
    double sens = 0, prec = 0, eff = 0, fn = 0, fp = 0;
    for (const auto& s : d.scans) {
      const auto set = prediction_set(s, result.lambda_hat).members;
      const auto o = count_outcomes(s.ground_truth, set);
      sens += static_cast<double>(o.tp) / static_cast<double>(o.tp + o.fn);
      prec += set.empty() ? 1.0 : static_cast<double>(o.tp) / static_cast<double>(set.size());
      eff += static_cast<double>(set.size());
      fn += static_cast<double>(o.fn);
      fp += static_cast<double>(o.fp);
    }
    const double n = static_cast<double>(d.size());
    const auto report = evaluate(result, d);
    CHECK(report.sensitivity == doctest::Approx(sens / n).epsilon(1e-12));
    CHECK(report.precision == doctest::Approx(prec / n).epsilon(1e-12));
    CHECK(report.efficiency == doctest::Approx(eff / n).epsilon(1e-12));
    CHECK(report.fn == doctest::Approx(fn / n).epsilon(1e-12));
    CHECK(report.fp == doctest::Approx(fp / n).epsilon(1e-12));
    CHECK(evaluate(result, profiles) == report);
  }
}

TEST_CASE("evaluate above every confidence") {
  GeneratorConfig cfg;
  cfg.n_scans = 10;
  const Dataset d = generate(cfg);
  CalibrationResult r;
  r.lambda_hat = select_nothing_lambda();
  const auto report = evaluate(r, d);
  CHECK(report.sensitivity == 0.0);
  CHECK(report.fp == 0.0);
  CHECK(report.efficiency == 0.0);
}

TEST_CASE("calibration is deterministic") {
  GeneratorConfig cfg;
  cfg.n_scans = 50;
  cfg.seed = 4;
  const Dataset d = generate(cfg);
  for (const auto& spec : {StrategySpec{Strategy::Crc}, StrategySpec{Strategy::Froc}}) {
    const auto a = calibrate(spec, risk_curve(d));
    const auto b = calibrate(spec, risk_curve(d));
    CHECK(a.lambda_hat == b.lambda_hat);
    CHECK(a.achieved_calibration_risk == b.achieved_calibration_risk);
  }
}
