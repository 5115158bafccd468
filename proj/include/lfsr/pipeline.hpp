#pragma once

#include "lfsr/evrn.hpp"
#include "lfsr/lightfield.hpp"
#include "lfsr/nvs.hpp"
#include "lfsr/resample.hpp"

#include <json.hpp>

#include <functional>
#include <string>

namespace lfsr {

enum class SrMode { SSR, ASR, ASSR };

std::string to_string(SrMode mode);
SrMode sr_mode_from_string(const std::string& name);

/// Volume-to-volume transformation applied by vsr().
using VolumeSrFn = std::function<EPIVolume(const EPIVolume&)>;
/// Receives one JSON object per completed volume.
using ProgressFn = std::function<void(const nlohmann::json&)>;

struct SrTask {
    SrMode mode = SrMode::SSR;
    int spatial_factor = 2;
    /// 5x5 -> 9x9 style angular up-sampling (A -> 2A - 1).
    bool angular = false;
    PssrMethod pssr = PssrMethod::Bicubic;
    PasrMethod pasr = PasrMethod::Mean;
    /// Refinement network; null runs the preliminary stage only.
    const EvrnWeights* evrn = nullptr;
    const NvsWeights* nvs = nullptr;
    /// Pre-up-sampled light field for PssrMethod::External (same color space as the input).
    const LightField4D* external_spatial = nullptr;

    void validate() const;
    /// Task description without the weight pointers.
    nlohmann::json to_json() const;
};

/// Slice along `axis`, apply f to every volume, merge.
LightField4D vsr(const LightField4D& lf, AngularAxis axis, const VolumeSrFn& f, const ProgressFn& progress = {});

/// Full two-stage super-resolution; color light fields are processed per
/// YCbCr channel and converted back. The result is clipped to [0, 1].
LightField4D super_resolve(const LightField4D& lf, const SrTask& task, const ProgressFn& progress = {});

/// Single-channel core of super_resolve without the final clip.
LightField4D super_resolve_channel(const LightField4D& lf, const SrTask& task,
                                   const LightField4D* external_channel = nullptr, const ProgressFn& progress = {});

} // namespace lfsr
