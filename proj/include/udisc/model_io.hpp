#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "udisc/utility_learn.hpp"

namespace udisc {

inline constexpr const char* kModelVersion = "ud-model/1";

nlohmann::json to_json(const UtilityModel& model);
nlohmann::json to_json(const TrainedPipeline& pipeline);

/// Rejects unknown model_version values with UnsupportedVersion.
TrainedPipeline pipeline_from_json(const nlohmann::json& j);

/// Pretty-printed with a trailing newline; identical pipelines give identical bytes.
std::string serialize_pipeline(const TrainedPipeline& pipeline);

void save_pipeline(const TrainedPipeline& pipeline, const std::filesystem::path& path);
TrainedPipeline load_pipeline(const std::filesystem::path& path);

}  // namespace udisc
