#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "crcdet/detections.hpp"
#include "crcdet/geometry.hpp"

namespace crcdet {

/// Parameters of the synthetic multi-annotator data model.
///
/// Each nodule has a latent salience s ~ Beta(salience_alpha, salience_beta).
/// Every annotator marks it independently with probability
/// logistic(annotator_steepness * (s - annotator_midpoint)); nodules nobody
/// marked are redrawn. The detector emits one overlapping candidate per nodule
/// with confidence clamp(logistic(detector_sharpness * (s - 0.5)) + N(0, detector_noise))
/// plus a batch of distractors that never touch a nodule, scored by
/// Beta(distractor_alpha, distractor_beta).
///
/// Defaults give Set-1..Set-4 analogues whose scan counts shrink with consensus
/// and whose low-consensus nodules score well below 0.5.
struct GeneratorConfig {
  std::size_t n_scans = 280;
  int nodules_min = 1;
  int nodules_max = 12;
  /// Success probability of the geometric nodule-count law truncated to [min, max].
  double nodule_count_p = 0.45;
  int n_annotators = 4;
  double salience_alpha = 1.2;
  double salience_beta = 1.4;
  double annotator_midpoint = 0.68;
  double annotator_steepness = 8.0;
  double detector_sharpness = 5.0;
  double detector_noise = 0.2;
  int distractors_min = 80;
  int distractors_max = 200;
  double distractor_alpha = 0.8;
  double distractor_beta = 8.0;
  Vec3 volume_extent{300.0, 300.0, 300.0};
  double diameter_min = 3.0;
  double diameter_max = 30.0;
  std::uint64_t seed = 0;

  /// Throws ConfigError when a parameter is out of range.
  void validate() const;
};

/// Latent variables behind one generated nodule.
struct NoduleLatent {
  std::size_t scan_index = 0;
  std::size_t truth_index = 0;
  double salience = 0.0;
  int consensus = 0;
  double true_candidate_confidence = 0.0;
};

struct GeneratedData {
  Dataset dataset;
  std::vector<NoduleLatent> nodules;
};

GeneratedData generate_with_latents(const GeneratorConfig& config);
Dataset generate(const GeneratorConfig& config);

/// One generated superset filtered at consensus 1..n_annotators (Set-1, Set-2, ...).
std::vector<Dataset> consensus_shift_suite(const GeneratorConfig& config);

}  // namespace crcdet
