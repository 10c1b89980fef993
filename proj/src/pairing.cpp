#include "crcdet/pairing.hpp"

#include <algorithm>
#include <deque>
#include <limits>

namespace crcdet {

namespace {
constexpr std::size_t kFree = std::numeric_limits<std::size_t>::max();
}

OverlapTable OverlapTable::build(std::span<const GroundTruthNodule> truth,
                                 std::span<const CandidateBox> candidates) {
  OverlapTable table;
  table.edges.resize(truth.size());
  for (std::size_t t = 0; t < truth.size(); ++t) {
    auto& list = table.edges[t];
    for (std::size_t c = 0; c < candidates.size(); ++c) {
      const double v = iou(truth[t].box, candidates[c].box);
      if (v > 0.0) list.push_back({c, v});
    }
    std::sort(list.begin(), list.end(), [&](const Edge& a, const Edge& b) {
      const auto& ca = candidates[a.candidate];
      const auto& cb = candidates[b.candidate];
      if (ca.confidence != cb.confidence) return ca.confidence > cb.confidence;
      if (a.iou != b.iou) return a.iou > b.iou;
      if (ca.box != cb.box) return ca.box < cb.box;
      return a.candidate < b.candidate;
    });
  }
  return table;
}

PairingResult pair(const OverlapTable& table, std::size_t candidate_count,
                   std::span<const bool> active) {
  const std::size_t n_truth = table.edges.size();
  std::vector<std::size_t> next(n_truth, 0);
  std::vector<std::size_t> holder(candidate_count, kFree);
  std::vector<double> held_iou(candidate_count, 0.0);
  std::vector<std::size_t> owned(n_truth, kFree);
  std::vector<bool> displaced(n_truth, false);
  PairingResult result;

  std::deque<std::size_t> queue;
  for (std::size_t t = 0; t < n_truth; ++t) queue.push_back(t);

  while (!queue.empty()) {
    const std::size_t t = queue.front();
    queue.pop_front();
    const auto& list = table.edges[t];
    while (next[t] < list.size() && !active.empty() && !active[list[next[t]].candidate]) ++next[t];
    if (next[t] == list.size()) continue;

    const auto [c, overlap] = list[next[t]++];
    if (holder[c] == kFree) {
      holder[c] = t;
      held_iou[c] = overlap;
      owned[t] = c;
      continue;
    }
    ++result.diagnostics.contested_claims;
    const std::size_t other = holder[c];
    const bool challenger_wins =
        overlap > held_iou[c] || (overlap == held_iou[c] && t < other);
    if (challenger_wins) {
      holder[c] = t;
      held_iou[c] = overlap;
      owned[t] = c;
      owned[other] = kFree;
      displaced[other] = true;
      queue.push_back(other);
    } else {
      displaced[t] = true;
      queue.push_back(t);
    }
  }

  for (std::size_t t = 0; t < n_truth; ++t) {
    if (displaced[t]) ++result.diagnostics.fallbacks;
    if (owned[t] == kFree) {
      result.unmatched_truth.push_back(t);
    } else {
      result.matches.emplace_back(t, owned[t]);
    }
  }
  return result;
}

PairingResult pair(std::span<const GroundTruthNodule> truth,
                   std::span<const CandidateBox> prediction_set) {
  return pair(OverlapTable::build(truth, prediction_set), prediction_set.size());
}

Outcomes count_outcomes(std::span<const GroundTruthNodule> truth,
                        std::span<const CandidateBox> prediction_set) {
  const auto result = pair(truth, prediction_set);
  Outcomes o;
  o.tp = result.matches.size();
  o.fp = prediction_set.size() - o.tp;
  o.fn = truth.size() - o.tp;
  return o;
}

}  // namespace crcdet
