#pragma once

#include "lfsr/lightfield.hpp"

#include <cstdint>

namespace lfsr {

struct SyntheticSpec {
    std::uint64_t seed = 1;
    /// Pixel shift per angular step.
    int disparity = 1;
    Index width = 64;
    Index height = 64;
    /// Odd angular extent A = 2K + 1.
    Index angular = 9;
    Index channels = 1;
    /// Gaussian blur sigma applied to the white-noise texture.
    double smoothness = 1.5;
};

/// Fronto-parallel textured plane: view (rho, tau) is the base texture
/// translated by (d * (rho - K), d * (tau - K)) in (x, y).
class SyntheticScene {
public:
    explicit SyntheticScene(const SyntheticSpec& spec);

    const SyntheticSpec& spec() const noexcept { return spec_; }
    Index center() const noexcept { return spec_.angular / 2; }

    /// View at a possibly fractional angular position; the resulting pixel
    /// shift d * (pos - K) must be an integer.
    Tensor render_view(double rho, double tau) const;
    LightField4D light_field() const;

private:
    SyntheticSpec spec_;
    Index pad_ = 0;
    Tensor canvas_; // (H + 2 pad, W + 2 pad, C)
};

LightField4D generate_synthetic(const SyntheticSpec& spec);

} // namespace lfsr
