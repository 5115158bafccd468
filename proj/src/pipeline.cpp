#include "lfsr/pipeline.hpp"

#include "lfsr/error.hpp"
#include "lfsr/parallel.hpp"

#include <chrono>
#include <mutex>
#include <optional>

namespace lfsr {
namespace {

struct ExternalVolumes {
    std::vector<EPIVolume> horizontal;
    std::vector<EPIVolume> vertical;

    const EPIVolume& lookup(const EPIVolume& v) const {
        const auto& set = v.orientation() == Orientation::Horizontal ? horizontal : vertical;
        require(v.fixed_index() >= 0 && v.fixed_index() < static_cast<Index>(set.size()),
                "external light field has no volume for index " + std::to_string(v.fixed_index()));
        return set[static_cast<std::size_t>(v.fixed_index())];
    }
};

VolumeSrFn make_pssr(const SrTask& task, const ExternalVolumes* external) {
    return [&task, external](const EPIVolume& v) {
        if (task.pssr == PssrMethod::External) return pssr_volume(v, task.spatial_factor, PssrMethod::External, &external->lookup(v));
        return pssr_volume(v, task.spatial_factor, PssrMethod::Bicubic);
    };
}

VolumeSrFn with_evrn(VolumeSrFn first, const SrTask& task) {
    if (task.evrn == nullptr) return first;
    return [first = std::move(first), &task](const EPIVolume& v) { return evrn_forward(first(v), *task.evrn); };
}

LightField4D average(const LightField4D& a, const LightField4D& b) {
    require(a.data().shape() == b.data().shape(), "cannot average light fields of different shapes");
    LightField4D out = a;
    for (Index i = 0; i < out.data().size(); ++i) out.data()[i] = 0.5f * (a.data()[i] + b.data()[i]);
    return out;
}

} // namespace

std::string to_string(SrMode mode) {
    switch (mode) {
    case SrMode::SSR: return "ssr";
    case SrMode::ASR: return "asr";
    case SrMode::ASSR: return "assr";
    }
    return "?";
}

SrMode sr_mode_from_string(const std::string& name) {
    if (name == "ssr" || name == "SSR") return SrMode::SSR;
    if (name == "asr" || name == "ASR") return SrMode::ASR;
    if (name == "assr" || name == "ASSR") return SrMode::ASSR;
    throw ContractError("unknown SR mode '" + name + "'");
}

void SrTask::validate() const {
    require(spatial_factor >= 1, "spatial factor must be at least 1");
    switch (mode) {
    case SrMode::SSR: require(spatial_factor > 1 && !angular, "SSR needs a spatial factor > 1 and no angular flag"); break;
    case SrMode::ASR: require(angular && spatial_factor == 1, "ASR needs the angular flag and spatial factor 1"); break;
    case SrMode::ASSR: require(angular && spatial_factor > 1, "ASSR needs both the angular flag and a spatial factor > 1"); break;
    }
    if (pasr == PasrMethod::Cnn && mode != SrMode::SSR) require(nvs != nullptr, "nvs-cnn PASR requires NVS weights");
    if (pssr == PssrMethod::External && mode != SrMode::ASR) {
        require(external_spatial != nullptr, "external PSSR requires a pre-up-sampled light field");
    }
}

nlohmann::json SrTask::to_json() const {
    return {{"mode", to_string(mode)},
            {"spatial_factor", spatial_factor},
            {"angular", angular},
            {"pssr", pssr == PssrMethod::Bicubic ? "bicubic" : "external"},
            {"pasr", pasr == PasrMethod::Mean ? "mean" : "cnn"},
            {"evrn", evrn != nullptr}};
}

LightField4D vsr(const LightField4D& lf, AngularAxis axis, const VolumeSrFn& f, const ProgressFn& progress) {
    const std::vector<EPIVolume> volumes = slice(lf, axis);
    std::vector<EPIVolume> results(volumes.size());
    std::mutex progress_mutex;
    parallel_for(volumes.size(), [&](std::size_t i) {
        const auto start = std::chrono::steady_clock::now();
        results[i] = f(volumes[i]);
        if (progress) {
            const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
            std::lock_guard lock(progress_mutex);
            progress({{"event", "volume"},
                      {"axis", to_string(axis)},
                      {"index", i},
                      {"in_shape", volumes[i].data().shape()},
                      {"out_shape", results[i].data().shape()},
                      {"ms", ms}});
        }
    });
    const Shape& first = results.front().data().shape();
    for (const EPIVolume& r : results) {
        require(r.data().shape() == first, "volume SR function produced inconsistent output shapes");
    }
    return merge(results, axis);
}

LightField4D super_resolve_channel(const LightField4D& lf, const SrTask& task, const LightField4D* external_channel,
                                   const ProgressFn& progress) {
    task.validate();
    require(lf.channels() == 1, "super_resolve_channel expects a single-channel light field");
    std::optional<ExternalVolumes> external;
    if (task.pssr == PssrMethod::External && task.mode != SrMode::ASR) {
        require(external_channel != nullptr, "external PSSR requires the matching pre-up-sampled channel");
        external = ExternalVolumes{slice(*external_channel, AngularAxis::Tau), slice(*external_channel, AngularAxis::Rho)};
    }
    const ExternalVolumes* ext = external ? &*external : nullptr;

    if (task.mode == SrMode::SSR) {
        const VolumeSrFn f = with_evrn(make_pssr(task, ext), task);
        return average(vsr(lf, AngularAxis::Tau, f, progress), vsr(lf, AngularAxis::Rho, f, progress));
    }

    LightField4D current = lf;
    if (task.mode == SrMode::ASSR) current = vsr(current, AngularAxis::Tau, make_pssr(task, ext), progress);

    const NvsWeights* nvs = task.nvs;
    const PasrMethod method = task.pasr;
    const VolumeSrFn f = with_evrn([nvs, method](const EPIVolume& v) { return pasr_volume(v, method, nvs); }, task);
    current = vsr(current, AngularAxis::Tau, f, progress);
    return vsr(current, AngularAxis::Rho, f, progress);
}

LightField4D super_resolve(const LightField4D& lf, const SrTask& task, const ProgressFn& progress) {
    task.validate();
    if (lf.color_space() == ColorSpace::Y) {
        return clip_unit(super_resolve_channel(lf, task, task.external_spatial, progress));
    }
    const LightField4D ycc = lf.color_space() == ColorSpace::RGB ? rgb_to_ycbcr(lf) : lf;
    std::optional<LightField4D> ext_ycc;
    if (task.external_spatial != nullptr) {
        require(task.external_spatial->color_space() == lf.color_space(),
                "external light field must share the input color space");
        ext_ycc = lf.color_space() == ColorSpace::RGB ? rgb_to_ycbcr(*task.external_spatial) : *task.external_spatial;
    }
    std::vector<LightField4D> channels;
    for (Index c = 0; c < 3; ++c) {
        const std::optional<LightField4D> ext_c = ext_ycc ? std::optional(extract_channel(*ext_ycc, c)) : std::nullopt;
        channels.push_back(clip_unit(super_resolve_channel(extract_channel(ycc, c), task, ext_c ? &*ext_c : nullptr, progress)));
    }
    const LightField4D joined = join_channels(channels, ColorSpace::YCbCr);
    return lf.color_space() == ColorSpace::RGB ? clip_unit(ycbcr_to_rgb(joined)) : joined;
}

} // namespace lfsr
