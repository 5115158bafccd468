#pragma once

#include "lfsr/container.hpp"
#include "lfsr/params.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>

namespace lfsr {

/// A network's configuration and parameters as persisted on disk.
struct StoredModel {
    std::string model; // "evrn" or "nvs"
    nlohmann::json config;
    ParamStore params;
};

/// Writes the container plus a `<path>.json` sidecar with the config and its hash.
void save_model(const std::filesystem::path& path, const StoredModel& model);
/// Loads and cross-checks the sidecar hash (when present) against the embedded one.
StoredModel load_model(const std::filesystem::path& path);

std::filesystem::path sidecar_path(const std::filesystem::path& weights);

/// Throws unless `actual` has exactly the names and shapes of `expected`.
void check_same_layout(const ParamStore& expected, const ParamStore& actual, const std::string& what);

} // namespace lfsr
