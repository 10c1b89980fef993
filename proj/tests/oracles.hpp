#pragma once
// Test-only reference implementations. Nothing here calls into the code paths
// it is used to check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <random>
#include <vector>

#include "crcdet/detections.hpp"
#include "crcdet/geometry.hpp"
#include "crcdet/pairing.hpp"
#include "crcdet/risk.hpp"
#include "crcdet/synth.hpp"

namespace oracle {

using crcdet::Box3;
using crcdet::CandidateBox;
using crcdet::GroundTruthNodule;
using crcdet::ScanRecord;

inline Box3 box(double x0, double y0, double z0, double x1, double y1, double z1) {
  return Box3{{x0, y0, z0}, {x1, y1, z1}};
}

inline Box3 cube(double x, double y, double z, double side) {
  return box(x, y, z, x + side, y + side, z + side);
}

/// IoU by point sampling inside the bounding box of a and b.
inline double monte_carlo_iou(const Box3& a, const Box3& b, std::size_t samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Box3 hull;
  for (int k = 0; k < 3; ++k) {
    hull.min_corner[k] = std::min(a.min_corner[k], b.min_corner[k]);
    hull.max_corner[k] = std::max(a.max_corner[k], b.max_corner[k]);
  }
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto inside = [](const Box3& bx, const double* p) {
    for (int k = 0; k < 3; ++k) {
      if (p[k] < bx.min_corner[k] || p[k] > bx.max_corner[k]) return false;
    }
    return true;
  };
  std::size_t in_both = 0, in_either = 0;
  for (std::size_t i = 0; i < samples; ++i) {
    double p[3];
    for (int k = 0; k < 3; ++k) {
      p[k] = hull.min_corner[k] + u(rng) * (hull.max_corner[k] - hull.min_corner[k]);
    }
    const bool ia = inside(a, p), ib = inside(b, p);
    in_both += (ia && ib) ? 1 : 0;
    in_either += (ia || ib) ? 1 : 0;
  }
  return in_either == 0 ? 0.0 : static_cast<double>(in_both) / static_cast<double>(in_either);
}

/// Overlap volume computed per axis from scratch.
inline double overlap_iou(const Box3& a, const Box3& b) {
  auto vol = [](const Box3& x) {
    double v = 1.0;
    for (int k = 0; k < 3; ++k) v *= x.max_corner[k] - x.min_corner[k];
    return v;
  };
  double inter = 1.0;
  for (int k = 0; k < 3; ++k) {
    const double lo = std::max(a.min_corner[k], b.min_corner[k]);
    const double hi = std::min(a.max_corner[k], b.max_corner[k]);
    inter *= std::max(0.0, hi - lo);
  }
  const double va = vol(a), vb = vol(b);
  if (va <= 0.0 || vb <= 0.0 || inter <= 0.0) return 0.0;
  return inter / (va + vb - inter);
}

/// Exhaustive pairing oracle. Enumerates every one-to-one assignment of
/// nodules to positive-IoU candidates and keeps those that are stable under
/// the pairing rule: a nodule prefers more confident candidates (then higher
/// IoU, then box order, then index); a contested candidate prefers the nodule
/// it overlaps most (then the lower index). Returns the TP count of every
/// stable assignment found.
inline std::vector<std::size_t> stable_assignment_sizes(const std::vector<GroundTruthNodule>& truth,
                                                        const std::vector<CandidateBox>& cands) {
  const std::size_t nt = truth.size(), nc = cands.size();
  std::vector<std::vector<double>> ov(nt, std::vector<double>(nc));
  for (std::size_t t = 0; t < nt; ++t)
    for (std::size_t c = 0; c < nc; ++c) ov[t][c] = overlap_iou(truth[t].box, cands[c].box);

  // true when nodule t strictly prefers candidate a over b
  auto nodule_prefers = [&](std::size_t t, std::size_t a, std::size_t b) {
    if (cands[a].confidence != cands[b].confidence) return cands[a].confidence > cands[b].confidence;
    if (ov[t][a] != ov[t][b]) return ov[t][a] > ov[t][b];
    if (cands[a].box != cands[b].box) return cands[a].box < cands[b].box;
    return a < b;
  };
  auto candidate_prefers = [&](std::size_t c, std::size_t s, std::size_t t) {
    if (ov[s][c] != ov[t][c]) return ov[s][c] > ov[t][c];
    return s < t;
  };

  constexpr std::size_t kNone = static_cast<std::size_t>(-1);
  std::vector<std::size_t> assign(nt, kNone);
  std::vector<std::size_t> holder(nc, kNone);
  std::vector<std::size_t> sizes;

  auto is_stable = [&] {
    for (std::size_t t = 0; t < nt; ++t) {
      for (std::size_t c = 0; c < nc; ++c) {
        if (ov[t][c] <= 0.0 || assign[t] == c) continue;
        const bool t_wants = assign[t] == kNone || nodule_prefers(t, c, assign[t]);
        const bool c_wants = holder[c] == kNone || candidate_prefers(c, t, holder[c]);
        if (t_wants && c_wants) return false;
      }
    }
    return true;
  };

  std::function<void(std::size_t)> rec = [&](std::size_t t) {
    if (t == nt) {
      if (is_stable()) {
        sizes.push_back(static_cast<std::size_t>(
            std::count_if(assign.begin(), assign.end(), [&](std::size_t c) { return c != kNone; })));
      }
      return;
    }
    assign[t] = kNone;
    rec(t + 1);
    for (std::size_t c = 0; c < nc; ++c) {
      if (ov[t][c] <= 0.0 || holder[c] != kNone) continue;
      assign[t] = c;
      holder[c] = t;
      rec(t + 1);
      holder[c] = kNone;
      assign[t] = kNone;
    }
  };
  rec(0);
  return sizes;
}

/// Random scan with cubes packed into a small volume so overlaps and
/// contested candidates are common. Confidences come from a coarse lattice so
/// ties occur.
inline ScanRecord random_scan(std::mt19937_64& rng, std::size_t max_truth, std::size_t max_cands,
                              double extent, const std::string& id, std::size_t min_truth = 0) {
  std::uniform_int_distribution<std::size_t> nt(min_truth, max_truth), nc(0, max_cands);
  std::uniform_real_distribution<double> pos(0.0, extent), side(1.0, extent / 3.0);
  std::uniform_int_distribution<int> lattice(0, 20);
  std::bernoulli_distribution coarse(0.5);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  ScanRecord s;
  s.scan_id = id;
  const std::size_t t_count = nt(rng), c_count = nc(rng);
  for (std::size_t i = 0; i < t_count; ++i) {
    s.ground_truth.push_back({cube(pos(rng), pos(rng), pos(rng), side(rng)), 1 + static_cast<int>(i % 4)});
  }
  for (std::size_t i = 0; i < c_count; ++i) {
    const double conf = coarse(rng) ? lattice(rng) / 20.0 : u01(rng);
    s.candidates.push_back({cube(pos(rng), pos(rng), pos(rng), side(rng)), conf});
  }
  return s;
}

/// Grid-scan CRC threshold. Every scan is re-paired from scratch at every
/// grid point and the corrected inequality is checked directly. Returns the
/// largest qualifying threshold, or nullopt when none qualifies.
inline std::optional<double> crc_lambda(const crcdet::Dataset& d, double alpha) {
  std::set<double> grid{0.0, std::nextafter(1.0, 2.0)};
  for (const auto& s : d.scans)
    for (const auto& c : s.candidates) grid.insert(c.confidence);
  const double n = static_cast<double>(d.size());
  std::optional<double> best;
  for (double l : grid) {
    double sum = 0.0;
    for (const auto& s : d.scans) {
      const auto o = crcdet::count_outcomes(s.ground_truth, crcdet::prediction_set(s, l).members);
      sum += o.tp + o.fn == 0 ? 0.0 : 1.0 - static_cast<double>(o.tp) / static_cast<double>(o.tp + o.fn);
    }
    const double risk = sum / n;
    if (n / (n + 1.0) * risk + 1.0 / (n + 1.0) <= alpha) best = l;
  }
  return best;
}

/// Small calibration set for the CRC oracle: up to `max_scans` scans with at
/// most 30 candidates each. Odd draws are adversarial random geometry, even
/// draws are generator output with few distractors so that low risk levels
/// are reachable.
inline crcdet::Dataset small_calibration(std::mt19937_64& rng, std::size_t max_scans, bool generated) {
  std::uniform_int_distribution<std::size_t> n(1, max_scans);
  const std::size_t count = n(rng);
  if (generated) {
    crcdet::GeneratorConfig cfg;
    cfg.n_scans = count;
    cfg.nodules_max = 5;
    cfg.distractors_min = 0;
    cfg.distractors_max = 25;
    cfg.seed = rng();
    return crcdet::generate(cfg);
  }
  crcdet::Dataset d;
  for (std::size_t i = 0; i < count; ++i) {
    d.scans.push_back(random_scan(rng, 4, 30, 30.0, "c" + std::to_string(i), 1));
  }
  return d;
}

}  // namespace oracle
