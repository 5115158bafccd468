#include "lfsr/synthetic.hpp"

#include "lfsr/error.hpp"
#include "lfsr/optim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <random>

namespace lfsr {
namespace {

std::vector<double> gaussian_taps(double sigma) {
    const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<double> taps(static_cast<std::size_t>(2 * radius + 1));
    double total = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        taps[static_cast<std::size_t>(i + radius)] = std::exp(-0.5 * i * i / (sigma * sigma));
        total += taps[static_cast<std::size_t>(i + radius)];
    }
    for (double& t : taps) t /= total;
    return taps;
}

// Separable blur with clamped borders on an (h, w) plane.
std::vector<double> blur(const std::vector<double>& src, Index h, Index w, double sigma) {
    if (sigma <= 0.0) return src;
    const std::vector<double> taps = gaussian_taps(sigma);
    const auto radius = static_cast<Index>(taps.size() / 2);
    std::vector<double> tmp(src.size()), out(src.size());
    for (Index y = 0; y < h; ++y) {
        for (Index x = 0; x < w; ++x) {
            double acc = 0.0;
            for (Index k = -radius; k <= radius; ++k) {
                acc += taps[static_cast<std::size_t>(k + radius)] * src[static_cast<std::size_t>(y * w + std::clamp<Index>(x + k, 0, w - 1))];
            }
            tmp[static_cast<std::size_t>(y * w + x)] = acc;
        }
    }
    for (Index y = 0; y < h; ++y) {
        for (Index x = 0; x < w; ++x) {
            double acc = 0.0;
            for (Index k = -radius; k <= radius; ++k) {
                acc += taps[static_cast<std::size_t>(k + radius)] * tmp[static_cast<std::size_t>(std::clamp<Index>(y + k, 0, h - 1) * w + x)];
            }
            out[static_cast<std::size_t>(y * w + x)] = acc;
        }
    }
    return out;
}

std::vector<double> normalized_noise(Rng& rng, Index h, Index w, double sigma) {
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    std::vector<double> noise(static_cast<std::size_t>(h * w));
    for (double& v : noise) v = dist(rng);
    std::vector<double> t = blur(noise, h, w, sigma);
    const auto [lo, hi] = std::minmax_element(t.begin(), t.end());
    const double a = *lo, span = std::max(*hi - *lo, 1e-12);
    for (double& v : t) v = 0.05 + 0.9 * (v - a) / span;
    return t;
}

} // namespace

SyntheticScene::SyntheticScene(const SyntheticSpec& spec) : spec_(spec) {
    require(spec.angular >= 1 && spec.angular % 2 == 1, "synthetic angular extent must be odd");
    require(spec.width > 0 && spec.height > 0, "synthetic extents must be positive");
    require(spec.channels == 1 || spec.channels == 3, "synthetic scenes have 1 or 3 channels");
    const Index k = spec.angular / 2;
    const Index reach = std::abs(spec.disparity) * k;
    require(4 * reach < std::min(spec.width, spec.height),
            "disparity too large: |d|*K must stay below min(W, H)/4");
    pad_ = reach + 1;
    const Index ch = spec.height + 2 * pad_, cw = spec.width + 2 * pad_;

    Rng rng(spec.seed);
    const std::vector<double> base = normalized_noise(rng, ch, cw, spec.smoothness);
    canvas_ = Tensor(Shape{ch, cw, spec.channels});
    if (spec.channels == 1) {
        for (Index i = 0; i < ch * cw; ++i) canvas_[i] = static_cast<float>(base[static_cast<std::size_t>(i)]);
        return;
    }
    for (Index c = 0; c < 3; ++c) {
        const std::vector<double> own = normalized_noise(rng, ch, cw, spec.smoothness);
        for (Index i = 0; i < ch * cw; ++i) {
            canvas_[i * 3 + c] = static_cast<float>(0.6 * base[static_cast<std::size_t>(i)] + 0.4 * own[static_cast<std::size_t>(i)]);
        }
    }
}

Tensor SyntheticScene::render_view(double rho, double tau) const {
    const double k = static_cast<double>(center());
    const double sx = spec_.disparity * (rho - k);
    const double sy = spec_.disparity * (tau - k);
    require(sx == std::round(sx) && sy == std::round(sy), "view position gives a non-integer shift");
    const auto dx = static_cast<Index>(sx), dy = static_cast<Index>(sy);
    require(std::abs(dx) < pad_ && std::abs(dy) < pad_, "view position outside the rendered canvas");
    const Index W = spec_.width, H = spec_.height, C = spec_.channels, cw = canvas_.dim(1);
    Tensor img(Shape{H, W, C});
    for (Index y = 0; y < H; ++y) {
        for (Index x = 0; x < W; ++x) {
            const Index src = ((y - dy + pad_) * cw + (x - dx + pad_)) * C;
            for (Index c = 0; c < C; ++c) img[(y * W + x) * C + c] = canvas_[src + c];
        }
    }
    return img;
}

LightField4D SyntheticScene::light_field() const {
    const Index A = spec_.angular;
    std::vector<Tensor> views;
    views.reserve(static_cast<std::size_t>(A * A));
    for (Index r = 0; r < A; ++r) {
        for (Index t = 0; t < A; ++t) views.push_back(render_view(static_cast<double>(r), static_cast<double>(t)));
    }
    return assemble_from_sais(views, A, A, spec_.channels == 1 ? ColorSpace::Y : ColorSpace::RGB);
}

LightField4D generate_synthetic(const SyntheticSpec& spec) { return SyntheticScene(spec).light_field(); }

} // namespace lfsr
