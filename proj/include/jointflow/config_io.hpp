#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "jointflow/config.hpp"
#include "jointflow/joint.hpp"

namespace jointflow {

inline constexpr int kDiagnosticsSchemaVersion = 1;

nlohmann::json configToJson(const SolveConfig& cfg);

/// Overlays the keys present in `j` on `base`. Unknown keys and wrong types throw
/// std::invalid_argument.
SolveConfig configFromJson(const nlohmann::json& j, SolveConfig base = {});

/// `key = value` lines, '#' starts a comment. Keys match the JSON field names.
SolveConfig configFromKeyValue(const std::string& text, SolveConfig base = {});

/// JSON when the first non-blank character is '{', key=value otherwise.
SolveConfig parseConfigText(const std::string& text, SolveConfig base = {});
SolveConfig loadConfigFile(const std::filesystem::path& path, SolveConfig base = {});

nlohmann::json energyTermsToJson(const EnergyTerms& terms);

/// Deterministic part of a joint run (no timings).
nlohmann::json diagnosticsToJson(const JointDiagnostics& diag, const SolveConfig& cfg);

/// Wall-clock timings of a joint run.
nlohmann::json timingsToJson(const JointDiagnostics& diag);

}  // namespace jointflow
