#pragma once

#include <json.hpp>

#include "cqpt/scenarios.hpp"

namespace cqpt {

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using Json = nlohmann::json;

Json dataset_to_json(const Dataset& data);
Dataset dataset_from_json(const Json& j);

Json result_to_json(const RecoveryResult& result);
// Rebuilds the process matrix, resolving the basis from its tag.
RecoveryResult result_from_json(const Json& j);

Json scenario_to_json(const ScenarioConfig& config);
ScenarioConfig scenario_from_json(const Json& j);
std::string scenario_name(const ScenarioConfig& config);

Json report_to_json(const ExperimentReport& report);
ExperimentReport report_from_json(const Json& j);

Json bound_to_json(const BoundReport& report);

// `index,relative_magnitude` rows, sorted nonincreasing.
std::string spectrum_to_csv(const SparsitySpectrum& spectrum);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace cqpt
