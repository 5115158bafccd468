#pragma once

#include "lfsr/lightfield.hpp"
#include "lfsr/tensor.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace lfsr {

/// Keys cubic convolution kernel with a = -0.5.
double keys_cubic(double x);

/// imresize-style bicubic resize of an (h, w) or (h, w, c) image.
///
/// Half-pixel centers, clamp-to-edge borders, and when down-sampling with
/// `antialias` the kernel is stretched by the inverse scale. Output is
/// clipped to [0, 1].
Tensor bicubic_resize(const Tensor& image, Index out_h, Index out_w, bool antialias = true);

struct DegradeSpec {
    int spatial_factor = 2;
    bool angular_decimate = false;
    bool antialias = true;
};

/// Resizes every SAI by 1/factor; angular axes are untouched.
LightField4D lf_spatial_downsample(const LightField4D& lf, int factor, bool antialias = true);
/// Keeps the views whose 0-based rho and tau indices are both even.
LightField4D angular_decimate(const LightField4D& lf);
LightField4D degrade(const LightField4D& lf, const DegradeSpec& spec);

enum class PssrMethod { Bicubic, External };

/// Preliminary spatial up-sampling of one EPI volume: each angular slice is
/// up-sampled as a SAI-oriented image. With External, `external` must
/// already have the target shape and is returned with this volume's tags.
EPIVolume pssr_volume(const EPIVolume& volume, int factor, PssrMethod method = PssrMethod::Bicubic,
                      const EPIVolume* external = nullptr);

struct PatchSpec {
    Index size = 48;
    Index stride = 16;
    /// Patches whose center-view standard deviation falls below this are dropped.
    double plain_reject_threshold = 0.02;
};

struct TrainingPatch {
    LightField4D lf;
    std::string scene;
    Index y = 0;
    Index x = 0;
};

/// Sliding spatial windows over a single-channel light field.
std::vector<TrainingPatch> extract_training_patches(const LightField4D& lf, const PatchSpec& spec,
                                                    const std::string& scene = "");

/// Window origins along one axis of the given length.
std::vector<Index> patch_origins(Index length, Index size, Index stride);

/// Patch sets on disk: one container file per patch plus `index.json`.
void save_patch_set(const std::filesystem::path& dir, const std::vector<TrainingPatch>& patches);
std::vector<TrainingPatch> load_patch_set(const std::filesystem::path& dir);

} // namespace lfsr
