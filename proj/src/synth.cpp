#include "crcdet/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include "crcdet/errors.hpp"
#include "crcdet/random.hpp"

namespace crcdet {

namespace {

constexpr int kPlacementAttempts = 10000;
// A true candidate reaches at most this many diameters from its nodule centre.
constexpr double kCandidateReach = 0.875;

double logistic(double x) {
  if (std::isnan(x)) return 0.5;
  return 1.0 / (1.0 + std::exp(-x));
}

class Sampler {
 public:
  explicit Sampler(std::uint64_t seed) : rng_(seed) {}

  double uniform() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  int uniform_int(int lo, int hi) {
    return lo + static_cast<int>(uniform_below(rng_, static_cast<std::uint64_t>(hi - lo + 1)));
  }
  bool bernoulli(double p) { return uniform() < p; }

  double beta(double a, double b) {
    std::gamma_distribution<double> ga(a, 1.0), gb(b, 1.0);
    const double x = ga(rng_);
    const double y = gb(rng_);
    return x / (x + y);
  }

  double normal(double sd) {
    if (sd <= 0.0) return 0.0;
    std::normal_distribution<double> nd(0.0, sd);
    return nd(rng_);
  }

  int truncated_geometric(double p, int lo, int hi) {
    int k = lo;
    while (k < hi && !bernoulli(p)) ++k;
    return k;
  }

 private:
  std::mt19937_64 rng_;
};

Box3 cube(const Vec3& centre, double half) {
  return Box3{{centre[0] - half, centre[1] - half, centre[2] - half},
              {centre[0] + half, centre[1] + half, centre[2] + half}};
}

struct PlacedNodule {
  Box3 box;
  Box3 reach;
};

}  // namespace

void GeneratorConfig::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError("generator config: " + what); };
  if (nodules_min < 1) fail("nodules_min must be >= 1");
  if (nodules_max < nodules_min) fail("nodules_max must be >= nodules_min");
  if (!(nodule_count_p > 0.0 && nodule_count_p <= 1.0)) fail("nodule_count_p must lie in (0, 1]");
  if (n_annotators < 1) fail("n_annotators must be >= 1");
  if (!(salience_alpha > 0.0) || !(salience_beta > 0.0)) fail("salience parameters must be > 0");
  if (!(annotator_steepness >= 0.0)) fail("annotator_steepness must be >= 0");
  if (!(detector_sharpness >= 0.0)) fail("detector_sharpness must be >= 0");
  if (!(detector_noise >= 0.0)) fail("detector_noise must be >= 0");
  if (distractors_min < 0 || distractors_max < distractors_min) fail("invalid distractor count range");
  if (!(distractor_alpha > 0.0) || !(distractor_beta > 0.0)) fail("distractor parameters must be > 0");
  if (!(diameter_min > 0.0) || diameter_max < diameter_min) fail("invalid diameter range");
  for (double e : volume_extent) {
    if (!(e > 0.0)) fail("volume_extent must be positive");
    if (e < 2.0 * kCandidateReach * diameter_max) fail("volume_extent too small for diameter_max");
  }
}

GeneratedData generate_with_latents(const GeneratorConfig& config) {
  config.validate();
  Sampler rng(config.seed);
  GeneratedData out;
  out.dataset.provenance = "synthetic (seed " + std::to_string(config.seed) + ")";
  out.dataset.scans.reserve(config.n_scans);

  for (std::size_t scan_index = 0; scan_index < config.n_scans; ++scan_index) {
    ScanRecord scan;
    char id[32];
    std::snprintf(id, sizeof id, "scan-%05zu", scan_index);
    scan.scan_id = id;

    const int n_nodules =
        rng.truncated_geometric(config.nodule_count_p, config.nodules_min, config.nodules_max);
    std::vector<PlacedNodule> placed;
    for (int k = 0; k < n_nodules; ++k) {
      double salience = 0.0;
      int consensus = 0;
      while (consensus == 0) {
        do {
          salience = rng.beta(config.salience_alpha, config.salience_beta);
        } while (!(salience > 0.0));
        const double p_mark =
            logistic(config.annotator_steepness * (salience - config.annotator_midpoint));
        consensus = 0;
        for (int a = 0; a < config.n_annotators; ++a) consensus += rng.bernoulli(p_mark) ? 1 : 0;
      }

      const double diameter = rng.uniform(config.diameter_min, config.diameter_max);
      const double half = diameter / 2.0;
      const double reach = kCandidateReach * diameter;
      bool ok = false;
      Vec3 centre{};
      for (int attempt = 0; attempt < kPlacementAttempts && !ok; ++attempt) {
        for (int ax = 0; ax < 3; ++ax) {
          centre[ax] = rng.uniform(reach, config.volume_extent[ax] - reach);
        }
        const Box3 mine = cube(centre, reach);
        ok = std::none_of(placed.begin(), placed.end(), [&](const PlacedNodule& p) {
          return intersection_volume(p.reach, mine) > 0.0;
        });
      }
      if (!ok) {
        throw ConfigError("generator config infeasible: cannot place " + std::to_string(n_nodules) +
                          " non-overlapping nodules in volume_extent");
      }
      const Box3 nodule_box = cube(centre, half);
      placed.push_back({nodule_box, cube(centre, reach)});

      Box3 candidate;
      for (int ax = 0; ax < 3; ++ax) {
        const double offset = rng.uniform(-diameter / 4.0, diameter / 4.0);
        const double h = half * rng.uniform(0.8, 1.25);
        candidate.min_corner[ax] = centre[ax] + offset - h;
        candidate.max_corner[ax] = centre[ax] + offset + h;
      }
      const double score = logistic(config.detector_sharpness * (salience - 0.5)) +
                           rng.normal(config.detector_noise);
      const double confidence = std::clamp(score, 0.0, 1.0);

      scan.ground_truth.push_back({nodule_box, consensus});
      scan.candidates.push_back({candidate, confidence});
      out.nodules.push_back({scan_index, scan.ground_truth.size() - 1, salience, consensus, confidence});
    }

    const int n_distractors = rng.uniform_int(config.distractors_min, config.distractors_max);
    const double below_one = std::nextafter(1.0, 0.0);
    for (int k = 0; k < n_distractors; ++k) {
      bool ok = false;
      Box3 box;
      for (int attempt = 0; attempt < kPlacementAttempts && !ok; ++attempt) {
        for (int ax = 0; ax < 3; ++ax) {
          const double size = rng.uniform(config.diameter_min, config.diameter_max);
          const double lo = rng.uniform(0.0, config.volume_extent[ax] - size);
          box.min_corner[ax] = lo;
          box.max_corner[ax] = lo + size;
        }
        ok = std::none_of(scan.ground_truth.begin(), scan.ground_truth.end(),
                          [&](const GroundTruthNodule& g) { return intersection_volume(g.box, box) > 0.0; });
      }
      if (!ok) throw ConfigError("generator config infeasible: no room for distractors");
      const double confidence =
          std::min(rng.beta(config.distractor_alpha, config.distractor_beta), below_one);
      scan.candidates.push_back({box, confidence});
    }

    std::stable_sort(scan.candidates.begin(), scan.candidates.end(), ranks_before);
    out.dataset.scans.push_back(std::move(scan));
  }
  return out;
}

Dataset generate(const GeneratorConfig& config) { return generate_with_latents(config).dataset; }

std::vector<Dataset> consensus_shift_suite(const GeneratorConfig& config) {
  const Dataset superset = generate(config);
  std::vector<Dataset> suite;
  for (int r = 1; r <= config.n_annotators; ++r) {
    Dataset d = filter_consensus(superset, r);
    d.provenance = superset.provenance + " | Set-" + std::to_string(r);
    suite.push_back(std::move(d));
  }
  return suite;
}

}  // namespace crcdet
