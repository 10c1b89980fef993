#pragma once

#include <json.hpp>

#include "crcdet/calibrate.hpp"
#include "crcdet/synth.hpp"

namespace crcdet {

// Unknown keys in a generator config are rejected so typos surface early.
void from_json(const nlohmann::json& j, GeneratorConfig& config);
void to_json(nlohmann::json& j, const GeneratorConfig& config);

void to_json(nlohmann::json& j, const CalibrationResult& r);
void to_json(nlohmann::json& j, const TrialReport& r);
void to_json(nlohmann::json& j, const AggregateMetrics& m);

StrategySpec strategy_from_json(const nlohmann::json& j);
nlohmann::json strategy_to_json(const StrategySpec& s);

}  // namespace crcdet
