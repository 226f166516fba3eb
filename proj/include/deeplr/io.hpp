#pragma once

#include <string>

#include "json.hpp"

#include "deeplr/deeplr.hpp"
#include "deeplr/harness.hpp"

namespace deeplr::io {

using nlohmann::json;

json to_json(const ConfidenceInterval& ci);
json to_json(const OptimizerConfig& config);
json to_json(const TrainConfig& config);
json to_json(const Head& head);
json to_json(const MlpSpec& spec);
json to_json(const SearchOptions& options);
json to_json(const harness::ExperimentConfig& config);
json to_json(const harness::CoverageReport& report);
json to_json(const harness::WilksReport& report);
json to_json(const harness::MarkovReport& report);

TrainConfig train_config_from_json(const json& j);
Head head_from_json(const json& j);
MlpSpec mlp_spec_from_json(const json& j);
SearchOptions search_options_from_json(const json& j);

/// Missing keys fall back to the experiment's preset values.
harness::ExperimentConfig experiment_config_from_json(const json& j);
harness::ExperimentConfig load_experiment_config(const std::string& path);

void write_json_file(const std::string& path, const json& j);

/// Writes `<dir>/<stem>.manifest.json` recording the configuration, its hash, the seeds
/// and any run-specific fields in `extra`. Returns the path written.
std::string write_manifest(const harness::ExperimentConfig& config, const std::string& dir,
                           const std::string& stem, const json& extra);

}  // namespace deeplr::io
