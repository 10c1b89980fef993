#include "crcdet/detections.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "crcdet/errors.hpp"
#include "crcdet/random.hpp"

namespace crcdet {

using nlohmann::json;

namespace {

struct LineContext {
  const std::string& source;
  std::size_t line;

  [[noreturn]] void parse_fail(const std::string& what) const {
    throw ParseError(source, line, what);
  }
  [[noreturn]] void invalid(const std::string& scan_id, const std::string& field,
                            const std::string& what) const {
    throw ValidationError(scan_id, field,
                          source + ":" + std::to_string(line) + ": " + what);
  }
};

const json& require(const json& obj, const char* key, const std::string& where,
                    const LineContext& ctx) {
  auto it = obj.find(key);
  if (it == obj.end()) ctx.parse_fail("missing field '" + where + key + "'");
  return *it;
}

Box3 parse_box(const json& j, const std::string& scan_id, const std::string& field,
               const LineContext& ctx) {
  if (!j.is_array() || j.size() != 6) ctx.parse_fail("'" + field + "' must be an array of 6 numbers");
  std::array<double, 6> c{};
  for (std::size_t k = 0; k < 6; ++k) {
    if (!j[k].is_number()) ctx.parse_fail("'" + field + "' must be an array of 6 numbers");
    c[k] = j[k].get<double>();
    if (!std::isfinite(c[k])) ctx.invalid(scan_id, field, "non-finite coordinate");
  }
  return Box3::from_array(c);
}

ScanRecord parse_record_impl(const std::string& text, const LineContext& ctx) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    ctx.parse_fail(std::string("malformed record: ") + e.what());
  }
  if (!j.is_object()) ctx.parse_fail("record must be an object");

  ScanRecord scan;
  const json& id = require(j, "scan_id", "", ctx);
  if (!id.is_string()) ctx.parse_fail("'scan_id' must be a string");
  scan.scan_id = id.get<std::string>();
  if (scan.scan_id.empty()) ctx.invalid(scan.scan_id, "scan_id", "empty scan_id");

  const json& cands = require(j, "candidates", "", ctx);
  if (!cands.is_array()) ctx.parse_fail("'candidates' must be an array");
  scan.candidates.reserve(cands.size());
  for (std::size_t i = 0; i < cands.size(); ++i) {
    const std::string where = "candidates[" + std::to_string(i) + "].";
    const json& c = cands[i];
    if (!c.is_object()) ctx.parse_fail("'" + where.substr(0, where.size() - 1) + "' must be an object");
    CandidateBox cb;
    cb.box = parse_box(require(c, "box", where, ctx), scan.scan_id, where + "box", ctx);
    const json& conf = require(c, "confidence", where, ctx);
    if (!conf.is_number()) ctx.parse_fail("'" + where + "confidence' must be a number");
    cb.confidence = conf.get<double>();
    if (!(cb.confidence >= 0.0 && cb.confidence <= 1.0)) {
      std::ostringstream msg;
      msg << "confidence " << cb.confidence << " outside [0, 1]";
      ctx.invalid(scan.scan_id, where + "confidence", msg.str());
    }
    scan.candidates.push_back(cb);
  }

  const json& truth = require(j, "ground_truth", "", ctx);
  if (!truth.is_array()) ctx.parse_fail("'ground_truth' must be an array");
  scan.ground_truth.reserve(truth.size());
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const std::string where = "ground_truth[" + std::to_string(i) + "].";
    const json& t = truth[i];
    if (!t.is_object()) ctx.parse_fail("'" + where.substr(0, where.size() - 1) + "' must be an object");
    GroundTruthNodule g;
    g.box = parse_box(require(t, "box", where, ctx), scan.scan_id, where + "box", ctx);
    const json& cons = require(t, "consensus", where, ctx);
    if (!cons.is_number_integer()) ctx.parse_fail("'" + where + "consensus' must be an integer");
    const auto value = cons.get<long long>();
    if (value < 1 || value > 1'000'000) {
      ctx.invalid(scan.scan_id, where + "consensus",
                  "consensus " + std::to_string(value) + " must be >= 1");
    }
    g.consensus = static_cast<int>(value);
    scan.ground_truth.push_back(g);
  }
  return scan;
}

json box_json(const Box3& b) {
  const auto a = b.to_array();
  return json::array({a[0], a[1], a[2], a[3], a[4], a[5]});
}

}  // namespace

std::size_t Dataset::nodule_count() const {
  std::size_t n = 0;
  for (const auto& s : scans) n += s.ground_truth.size();
  return n;
}

ScanRecord parse_record(const std::string& text, const std::string& source, std::size_t line) {
  return parse_record_impl(text, LineContext{source, line});
}

std::string serialize_record(const ScanRecord& scan) {
  json cands = json::array();
  for (const auto& c : scan.candidates) {
    cands.push_back({{"box", box_json(c.box)}, {"confidence", c.confidence}});
  }
  json truth = json::array();
  for (const auto& g : scan.ground_truth) {
    truth.push_back({{"box", box_json(g.box)}, {"consensus", g.consensus}});
  }
  json j;
  j["scan_id"] = scan.scan_id;
  j["candidates"] = std::move(cands);
  j["ground_truth"] = std::move(truth);
  return j.dump();
}

Dataset read_dataset(std::istream& in, const std::string& source, const LoadOptions& options) {
  Dataset d;
  d.provenance = source;
  std::unordered_set<std::string> seen;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    const LineContext ctx{source, line};
    ScanRecord scan = parse_record_impl(text, ctx);
    if (!seen.insert(scan.scan_id).second) {
      ctx.invalid(scan.scan_id, "scan_id", "duplicate scan_id");
    }
    if (options.nms_threshold) {
      scan.candidates = nms_filter(scan.candidates, *options.nms_threshold);
    }
    d.scans.push_back(std::move(scan));
  }
  return d;
}

Dataset load_dataset(const std::filesystem::path& path, const LoadOptions& options) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  return read_dataset(in, path.string(), options);
}

void write_dataset(const Dataset& d, std::ostream& out) {
  for (const auto& s : d.scans) out << serialize_record(s) << '\n';
}

void save_dataset(const Dataset& d, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  write_dataset(d, out);
}

void validate(const Dataset& d) {
  std::unordered_set<std::string> seen;
  for (const auto& s : d.scans) {
    if (s.scan_id.empty()) throw ValidationError(s.scan_id, "scan_id", "empty scan_id");
    if (!seen.insert(s.scan_id).second) throw ValidationError(s.scan_id, "scan_id", "duplicate scan_id");
    for (std::size_t i = 0; i < s.candidates.size(); ++i) {
      const auto& c = s.candidates[i];
      const std::string where = "candidates[" + std::to_string(i) + "]";
      if (!c.box.valid()) throw ValidationError(s.scan_id, where + ".box", "invalid box");
      if (!(c.confidence >= 0.0 && c.confidence <= 1.0)) {
        throw ValidationError(s.scan_id, where + ".confidence", "confidence outside [0, 1]");
      }
    }
    for (std::size_t i = 0; i < s.ground_truth.size(); ++i) {
      const auto& g = s.ground_truth[i];
      const std::string where = "ground_truth[" + std::to_string(i) + "]";
      if (!g.box.valid()) throw ValidationError(s.scan_id, where + ".box", "invalid box");
      if (g.consensus < 1) throw ValidationError(s.scan_id, where + ".consensus", "consensus must be >= 1");
    }
  }
}

ConsensusFilterOutcome filter_consensus_counted(const Dataset& d, int min_consensus) {
  if (min_consensus < 1) throw std::invalid_argument("min_consensus must be >= 1");
  ConsensusFilterOutcome out;
  out.dataset.provenance = d.provenance + " | consensus>=" + std::to_string(min_consensus);
  for (const auto& s : d.scans) {
    ScanRecord kept;
    kept.scan_id = s.scan_id;
    kept.candidates = s.candidates;
    for (const auto& g : s.ground_truth) {
      if (g.consensus >= min_consensus) kept.ground_truth.push_back(g);
    }
    if (kept.ground_truth.empty()) {
      ++out.dropped_scans;
      continue;
    }
    out.dataset.scans.push_back(std::move(kept));
  }
  out.empty_warning = out.dataset.empty();
  return out;
}

Dataset filter_consensus(const Dataset& d, int min_consensus) {
  return filter_consensus_counted(d, min_consensus).dataset;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(std::size_t n,
                                                                             std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("dataset too small to split: need at least 2 scans");
  auto perm = random_permutation(n, seed);
  const std::size_t n_cal = (n + 1) / 2;
  std::vector<std::size_t> cal(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_cal));
  std::vector<std::size_t> test(perm.begin() + static_cast<std::ptrdiff_t>(n_cal), perm.end());
  return {std::move(cal), std::move(test)};
}

std::pair<Dataset, Dataset> split_dataset(const Dataset& d, std::uint64_t seed) {
  auto [cal_idx, test_idx] = split_indices(d.size(), seed);
  Dataset cal, test;
  cal.provenance = d.provenance + " | calibration";
  test.provenance = d.provenance + " | test";
  for (auto i : cal_idx) cal.scans.push_back(d.scans[i]);
  for (auto i : test_idx) test.scans.push_back(d.scans[i]);
  return {std::move(cal), std::move(test)};
}

std::vector<UnpairableTruth> find_unpairable_truth(const Dataset& d) {
  std::vector<UnpairableTruth> out;
  for (const auto& s : d.scans) {
    for (std::size_t t = 0; t < s.ground_truth.size(); ++t) {
      bool pairable = false;
      for (const auto& c : s.candidates) {
        if (iou(s.ground_truth[t].box, c.box) > 0.0) {
          pairable = true;
          break;
        }
      }
      if (!pairable) out.push_back({s.scan_id, t});
    }
  }
  return out;
}

}  // namespace crcdet
