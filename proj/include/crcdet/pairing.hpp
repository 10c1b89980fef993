#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "crcdet/detections.hpp"
#include "crcdet/geometry.hpp"

namespace crcdet {

struct PairingDiagnostics {
  /// Proposals that hit a candidate already held by another nodule.
  std::size_t contested_claims = 0;
  /// Nodules that lost a contested candidate and moved on to their next choice.
  std::size_t fallbacks = 0;
};

struct PairingResult {
  /// (ground-truth index, candidate index), ordered by ground-truth index.
  std::vector<std::pair<std::size_t, std::size_t>> matches;
  std::vector<std::size_t> unmatched_truth;
  PairingDiagnostics diagnostics;
};

/// Positive-IoU edges from each nodule to the candidates it may pair with.
/// Each nodule's list is ordered by its preference: confidence, then IoU,
/// then box order, then index.
struct OverlapTable {
  struct Edge {
    std::size_t candidate;
    double iou;
  };
  std::vector<std::vector<Edge>> edges;

  static OverlapTable build(std::span<const GroundTruthNodule> truth,
                            std::span<const CandidateBox> candidates);
};

/// Pairs every nodule with its most confident positive-IoU candidate. A
/// candidate wanted by several nodules goes to the one it overlaps most
/// (ties: lower nodule index); the others fall back to their next choice until
/// no candidate is claimed twice. Only candidates with `active[c]` set take
/// part when a mask is given.
PairingResult pair(const OverlapTable& table, std::size_t candidate_count,
                   std::span<const bool> active = {});

PairingResult pair(std::span<const GroundTruthNodule> truth,
                   std::span<const CandidateBox> prediction_set);

struct Outcomes {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;

  friend bool operator==(const Outcomes&, const Outcomes&) = default;
};

Outcomes count_outcomes(std::span<const GroundTruthNodule> truth,
                        std::span<const CandidateBox> prediction_set);

}  // namespace crcdet
