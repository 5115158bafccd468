#pragma once

#include "lfsr/lightfield.hpp"
#include "lfsr/tensor.hpp"

#include <json.hpp>

#include <filesystem>

namespace lfsr {

/// Contents of `manifest.json` in a light-field directory.
struct LfManifest {
    Index width = 0;
    Index height = 0;
    Index angular_rho = 0;
    Index angular_tau = 0;
    int bit_depth = 8;
    ColorSpace color_space = ColorSpace::Y;
    /// Free-form provenance (degradation records, generator settings, config echo).
    nlohmann::json extra = nlohmann::json::object();

    nlohmann::json to_json() const;
    static LfManifest from_json(const nlohmann::json& j);
};

struct LoadedLightField {
    LightField4D lf;
    LfManifest manifest;
};

/// Round-half-up quantization of a [0, 1] value to an integer level.
std::uint32_t quantize(float value, int bit_depth);

/// 8- or 16-bit PNG as an (H, W, C) tensor in [0, 1].
Tensor read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const Tensor& image, int bit_depth = 8);

std::string view_filename(Index rho, Index tau);

/// Writes `view_RR_TT.png` for every view plus `manifest.json`.
void save_lightfield(const std::filesystem::path& dir, const LightField4D& lf, int bit_depth = 8,
                     const nlohmann::json& extra = nlohmann::json::object());
/// Loads a light-field directory; every view of the grid must be present.
LoadedLightField load_lightfield(const std::filesystem::path& dir);

} // namespace lfsr
