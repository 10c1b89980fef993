#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "crcdet/geometry.hpp"

namespace crcdet {

/// A reference nodule and how many annotators marked it.
struct GroundTruthNodule {
  Box3 box;
  int consensus = 1;

  friend bool operator==(const GroundTruthNodule&, const GroundTruthNodule&) = default;
};

struct ScanRecord {
  std::string scan_id;
  std::vector<CandidateBox> candidates;
  std::vector<GroundTruthNodule> ground_truth;

  friend bool operator==(const ScanRecord&, const ScanRecord&) = default;
};

struct Dataset {
  std::vector<ScanRecord> scans;
  std::string provenance;

  std::size_t size() const { return scans.size(); }
  bool empty() const { return scans.empty(); }
  std::size_t nodule_count() const;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

struct LoadOptions {
  /// When set, candidates of every scan pass through `nms_filter` with this threshold.
  std::optional<double> nms_threshold;
};

/// Parses one record line. `source` and `line` only label errors.
ScanRecord parse_record(const std::string& text, const std::string& source = "<string>",
                        std::size_t line = 1);
std::string serialize_record(const ScanRecord& scan);

/// Reads a line-delimited record file. Box corners are normalized per axis and
/// every record is validated; throws ParseError or ValidationError.
Dataset load_dataset(const std::filesystem::path& path, const LoadOptions& options = {});
Dataset read_dataset(std::istream& in, const std::string& source, const LoadOptions& options = {});

void save_dataset(const Dataset& d, const std::filesystem::path& path);
void write_dataset(const Dataset& d, std::ostream& out);

/// Throws ValidationError on duplicate ids or out-of-range fields.
void validate(const Dataset& d);

struct ConsensusFilterOutcome {
  Dataset dataset;
  std::size_t dropped_scans = 0;
  /// Set when no scan survives the filter.
  bool empty_warning = false;
};

/// Keeps nodules marked by at least `min_consensus` annotators and drops scans
/// left without any. Candidates are untouched.
ConsensusFilterOutcome filter_consensus_counted(const Dataset& d, int min_consensus);
Dataset filter_consensus(const Dataset& d, int min_consensus);

/// Seeded split: a uniform permutation, first ceil(n/2) scans to calibration.
std::pair<Dataset, Dataset> split_dataset(const Dataset& d, std::uint64_t seed);

/// Calibration/test index sets for a dataset of size n (same rule as split_dataset).
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(std::size_t n,
                                                                             std::uint64_t seed);

/// A ground-truth nodule with zero IoU against every candidate of its scan.
struct UnpairableTruth {
  std::string scan_id;
  std::size_t truth_index = 0;
};

std::vector<UnpairableTruth> find_unpairable_truth(const Dataset& d);

}  // namespace crcdet
