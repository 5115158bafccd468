#pragma once

#include "lfsr/tensor.hpp"

#include <span>
#include <string>
#include <vector>

namespace lfsr {

enum class ColorSpace { RGB, YCbCr, Y };
enum class AngularAxis { Rho, Tau };
enum class Orientation { Horizontal, Vertical };

std::string to_string(ColorSpace cs);
ColorSpace color_space_from_string(const std::string& name);
std::string to_string(AngularAxis axis);

struct ViewIndex {
    Index rho = 0;
    Index tau = 0;
};

/// 4D light field L(x, y, rho, tau, c) stored as a (y, x, rho, tau, c) tensor.
///
/// Values are nominally in [0, 1]; intermediate results of the refinement
/// pipeline may leave that range until the final clip.
class LightField4D {
public:
    LightField4D() = default;
    LightField4D(Index height, Index width, Index angular_rho, Index angular_tau, Index channels,
                 ColorSpace color_space, float fill = 0.0f);
    LightField4D(Tensor data, ColorSpace color_space);

    Index height() const { return data_.dim(0); }
    Index width() const { return data_.dim(1); }
    Index angular_rho() const { return data_.dim(2); }
    Index angular_tau() const { return data_.dim(3); }
    Index channels() const { return data_.dim(4); }
    ColorSpace color_space() const noexcept { return color_space_; }

    float& operator()(Index y, Index x, Index rho, Index tau, Index c = 0) {
        return data_[(((y * width() + x) * angular_rho() + rho) * angular_tau() + tau) * channels() + c];
    }
    float operator()(Index y, Index x, Index rho, Index tau, Index c = 0) const {
        return data_[(((y * width() + x) * angular_rho() + rho) * angular_tau() + tau) * channels() + c];
    }

    const Tensor& data() const noexcept { return data_; }
    Tensor& data() noexcept { return data_; }

    bool in_unit_range() const;

    friend bool operator==(const LightField4D& a, const LightField4D& b) {
        return a.color_space_ == b.color_space_ && a.data_ == b.data_;
    }

private:
    Tensor data_;
    ColorSpace color_space_ = ColorSpace::Y;
};

/// Single-channel EPI volume in (s1, a, s2) order. Horizontal volumes are
/// (x, rho, y) at fixed tau; vertical volumes are (y, tau, x) at fixed rho.
class EPIVolume {
public:
    EPIVolume() = default;
    EPIVolume(Tensor data, Orientation orientation, Index fixed_index);

    Index s1() const { return data_.dim(0); }
    Index angular() const { return data_.dim(1); }
    Index s2() const { return data_.dim(2); }
    Orientation orientation() const noexcept { return orientation_; }
    Index fixed_index() const noexcept { return fixed_index_; }

    float operator()(Index i, Index a, Index j) const { return data_[(i * angular() + a) * s2() + j]; }
    float& operator()(Index i, Index a, Index j) { return data_[(i * angular() + a) * s2() + j]; }

    const Tensor& data() const noexcept { return data_; }
    Tensor& data() noexcept { return data_; }

    /// The 2D (s1, s2) image at angular index a.
    Tensor a_slice(Index a) const;
    /// Stacks (s1, s2) images along the angular axis.
    static EPIVolume from_a_slices(std::span<const Tensor> slices, Orientation orientation, Index fixed_index);

    /// Same volume with a channel axis appended: (s1, a, s2, 1).
    Tensor as_feature_map() const { return data_.reshaped(Shape{s1(), angular(), s2(), 1}); }

    friend bool operator==(const EPIVolume& a, const EPIVolume& b) {
        return a.orientation_ == b.orientation_ && a.fixed_index_ == b.fixed_index_ && a.data_ == b.data_;
    }

private:
    Tensor data_;
    Orientation orientation_ = Orientation::Horizontal;
    Index fixed_index_ = 0;
};

/// Sub-aperture image (H, W, C) at a fixed view.
Tensor extract_sai(const LightField4D& lf, ViewIndex view);
/// Angular patch image (A_rho, A_tau, C) at spatial location (y, x).
Tensor extract_api(const LightField4D& lf, Index y, Index x);
/// Builds a light field from SAIs ordered rho-major (index rho * A_tau + tau).
LightField4D assemble_from_sais(std::span<const Tensor> sais, Index angular_rho, Index angular_tau,
                                ColorSpace color_space);

/// EPI volumes along one angular axis: tau gives A_tau horizontal volumes,
/// rho gives A_rho vertical volumes. Requires a single-channel light field.
std::vector<EPIVolume> slice(const LightField4D& lf, AngularAxis axis);
/// Inverse of slice; volumes must share shape and orientation and be in index order.
LightField4D merge(std::span<const EPIVolume> volumes, AngularAxis axis);

/// BT.601 full-range conversions.
LightField4D rgb_to_ycbcr(const LightField4D& lf);
LightField4D ycbcr_to_rgb(const LightField4D& lf);
/// Luma channel as a Y light field (identity for Y input).
LightField4D luma(const LightField4D& lf);

/// Keeps the central target x target views.
LightField4D crop_central_views(const LightField4D& lf, Index target);

/// Single channel c as a Y-tagged light field.
LightField4D extract_channel(const LightField4D& lf, Index c);
/// Stacks single-channel light fields into one with the given color space.
LightField4D join_channels(std::span<const LightField4D> channels, ColorSpace color_space);

LightField4D clip_unit(const LightField4D& lf);

} // namespace lfsr
