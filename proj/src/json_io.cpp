#include "crcdet/json_io.hpp"

#include <cmath>
#include <set>
#include <string>

#include "crcdet/errors.hpp"

namespace crcdet {

using nlohmann::json;

namespace {

template <typename T>
void read_field(const json& j, const char* key, T& out) {
  auto it = j.find(key);
  if (it == j.end()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("field '") + key + "' has the wrong type");
  }
}

json nan_as_null(double v) { return std::isnan(v) ? json(nullptr) : json(v); }

}  // namespace

void from_json(const json& j, GeneratorConfig& c) {
  if (!j.is_object()) throw ConfigError("generator config must be an object");
  static const std::set<std::string> known = {
      "n_scans",          "nodules_min",       "nodules_max",         "nodule_count_p",
      "n_annotators",     "salience_alpha",    "salience_beta",       "annotator_midpoint",
      "annotator_steepness", "detector_sharpness", "detector_noise",  "distractors_min",
      "distractors_max",  "distractor_alpha",  "distractor_beta",     "volume_extent",
      "diameter_min",     "diameter_max",      "seed"};
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) throw ConfigError("unknown generator config key '" + key + "'");
  }
  read_field(j, "n_scans", c.n_scans);
  read_field(j, "nodules_min", c.nodules_min);
  read_field(j, "nodules_max", c.nodules_max);
  read_field(j, "nodule_count_p", c.nodule_count_p);
  read_field(j, "n_annotators", c.n_annotators);
  read_field(j, "salience_alpha", c.salience_alpha);
  read_field(j, "salience_beta", c.salience_beta);
  read_field(j, "annotator_midpoint", c.annotator_midpoint);
  read_field(j, "annotator_steepness", c.annotator_steepness);
  read_field(j, "detector_sharpness", c.detector_sharpness);
  read_field(j, "detector_noise", c.detector_noise);
  read_field(j, "distractors_min", c.distractors_min);
  read_field(j, "distractors_max", c.distractors_max);
  read_field(j, "distractor_alpha", c.distractor_alpha);
  read_field(j, "distractor_beta", c.distractor_beta);
  read_field(j, "volume_extent", c.volume_extent);
  read_field(j, "diameter_min", c.diameter_min);
  read_field(j, "diameter_max", c.diameter_max);
  read_field(j, "seed", c.seed);
}

void to_json(json& j, const GeneratorConfig& c) {
  j = json{{"n_scans", c.n_scans},
           {"nodules_min", c.nodules_min},
           {"nodules_max", c.nodules_max},
           {"nodule_count_p", c.nodule_count_p},
           {"n_annotators", c.n_annotators},
           {"salience_alpha", c.salience_alpha},
           {"salience_beta", c.salience_beta},
           {"annotator_midpoint", c.annotator_midpoint},
           {"annotator_steepness", c.annotator_steepness},
           {"detector_sharpness", c.detector_sharpness},
           {"detector_noise", c.detector_noise},
           {"distractors_min", c.distractors_min},
           {"distractors_max", c.distractors_max},
           {"distractor_alpha", c.distractor_alpha},
           {"distractor_beta", c.distractor_beta},
           {"volume_extent", c.volume_extent},
           {"diameter_min", c.diameter_min},
           {"diameter_max", c.diameter_max},
           {"seed", c.seed}};
}

void to_json(json& j, const CalibrationResult& r) {
  j = json{{"strategy", std::string(to_string(r.strategy))},
           {"lambda_hat", r.lambda_hat},
           {"n", r.n},
           {"achieved_calibration_risk", nan_as_null(r.achieved_calibration_risk)},
           {"infeasible", r.infeasible}};
  j["alpha"] = r.alpha ? json(*r.alpha) : json(nullptr);
  j["target_sensitivity"] = r.target_sensitivity ? json(*r.target_sensitivity) : json(nullptr);
}

void to_json(json& j, const TrialReport& r) {
  j = json{{"dataset", r.dataset},
           {"strategy", std::string(to_string(r.strategy))},
           {"rep", r.rep},
           {"lambda_hat", r.lambda_hat},
           {"sensitivity", r.sensitivity},
           {"precision", r.precision},
           {"efficiency", r.efficiency},
           {"fn", r.fn},
           {"fp", r.fp},
           {"infeasible", r.infeasible}};
}

void to_json(json& j, const AggregateMetrics& m) {
  j = json{{"sensitivity_froc", m.sensitivity_froc},
           {"sensitivity_prc", m.sensitivity_prc},
           {"precision_prc", m.precision_prc},
           {"false_positives_froc", m.false_positives_froc},
           {"efficiency", m.efficiency},
           {"fn_per_scan", m.fn_per_scan},
           {"empty_prediction_sets", m.empty_prediction_sets},
           {"n", m.n}};
}

StrategySpec strategy_from_json(const json& j) {
  StrategySpec s;
  if (j.is_string()) {
    s.kind = parse_strategy(j.get<std::string>());
    return s;
  }
  if (!j.is_object() || !j.contains("kind")) {
    throw ConfigError("strategy entries need a 'kind' (naive, froc or crc)");
  }
  s.kind = parse_strategy(j.at("kind").get<std::string>());
  read_field(j, "fixed_lambda", s.fixed_lambda);
  read_field(j, "target_sensitivity", s.target_sensitivity);
  read_field(j, "alpha", s.alpha);
  return s;
}

json strategy_to_json(const StrategySpec& s) {
  json j{{"kind", std::string(to_string(s.kind))}};
  switch (s.kind) {
    case Strategy::Naive: j["fixed_lambda"] = s.fixed_lambda; break;
    case Strategy::Froc: j["target_sensitivity"] = s.target_sensitivity; break;
    case Strategy::Crc: j["alpha"] = s.alpha; break;
  }
  return j;
}

}  // namespace crcdet
