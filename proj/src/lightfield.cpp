#include "lfsr/lightfield.hpp"

#include "lfsr/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

namespace lfsr {
namespace {

// BT.601 full range, chroma offset 0.5 on normalized data.
const Eigen::Matrix3d& rgb_to_ycbcr_matrix() {
    static const Eigen::Matrix3d m = (Eigen::Matrix3d() << 0.299, 0.587, 0.114,   //
                                      -0.168736, -0.331264, 0.5,                   //
                                      0.5, -0.418688, -0.081312)
                                         .finished();
    return m;
}

const Eigen::Matrix3d& ycbcr_to_rgb_matrix() {
    static const Eigen::Matrix3d m = rgb_to_ycbcr_matrix().inverse();
    return m;
}

const Eigen::Vector3d kChromaOffset(0.0, 0.5, 0.5);

LightField4D like(const LightField4D& lf, Index channels, ColorSpace cs) {
    return LightField4D(lf.height(), lf.width(), lf.angular_rho(), lf.angular_tau(), channels, cs);
}

} // namespace

std::string to_string(ColorSpace cs) {
    switch (cs) {
    case ColorSpace::RGB: return "rgb";
    case ColorSpace::YCbCr: return "ycbcr";
    case ColorSpace::Y: return "y";
    }
    return "?";
}

ColorSpace color_space_from_string(const std::string& name) {
    if (name == "rgb" || name == "RGB") return ColorSpace::RGB;
    if (name == "ycbcr" || name == "YCbCr") return ColorSpace::YCbCr;
    if (name == "y" || name == "Y") return ColorSpace::Y;
    throw ContractError("unknown color space '" + name + "'");
}

std::string to_string(AngularAxis axis) { return axis == AngularAxis::Rho ? "rho" : "tau"; }

LightField4D::LightField4D(Index height, Index width, Index angular_rho, Index angular_tau, Index channels,
                           ColorSpace color_space, float fill)
    : LightField4D(Tensor(Shape{height, width, angular_rho, angular_tau, channels}, fill), color_space) {}

LightField4D::LightField4D(Tensor data, ColorSpace color_space) : data_(std::move(data)), color_space_(color_space) {
    require(data_.rank() == 5, "light field data must be (y, x, rho, tau, c), got " + shape_string(data_.shape()));
    const Index c = data_.dim(4);
    require(c == 1 || c == 3, "light field must have 1 or 3 channels");
    require((color_space_ == ColorSpace::Y) == (c == 1), "color space Y requires exactly one channel");
}

bool LightField4D::in_unit_range() const {
    return std::all_of(data_.values().begin(), data_.values().end(),
                       [](float v) { return std::isfinite(v) && v >= 0.0f && v <= 1.0f; });
}

EPIVolume::EPIVolume(Tensor data, Orientation orientation, Index fixed_index)
    : data_(std::move(data)), orientation_(orientation), fixed_index_(fixed_index) {
    require(data_.rank() == 3, "EPI volume must be (s1, a, s2), got " + shape_string(data_.shape()));
}

Tensor EPIVolume::a_slice(Index a) const {
    if (a < 0 || a >= angular()) throw RangeError("EPI volume angular index out of range");
    Tensor out(Shape{s1(), s2()});
    for (Index i = 0; i < s1(); ++i) {
        std::copy_n(data_.data() + (i * angular() + a) * s2(), s2(), out.data() + i * s2());
    }
    return out;
}

EPIVolume EPIVolume::from_a_slices(std::span<const Tensor> slices, Orientation orientation, Index fixed_index) {
    require(!slices.empty(), "cannot build a volume from zero slices");
    const Shape& s = slices.front().shape();
    require(s.size() == 2, "volume slices must be 2D");
    const auto n = static_cast<Index>(slices.size());
    Tensor data(Shape{s[0], n, s[1]});
    for (Index a = 0; a < n; ++a) {
        const Tensor& img = slices[static_cast<std::size_t>(a)];
        require(img.shape() == s, "volume slices must share one shape");
        for (Index i = 0; i < s[0]; ++i) std::copy_n(img.data() + i * s[1], s[1], data.data() + (i * n + a) * s[1]);
    }
    return EPIVolume(std::move(data), orientation, fixed_index);
}

Tensor extract_sai(const LightField4D& lf, ViewIndex view) {
    if (view.rho < 0 || view.rho >= lf.angular_rho() || view.tau < 0 || view.tau >= lf.angular_tau()) {
        throw RangeError("view (" + std::to_string(view.rho) + ", " + std::to_string(view.tau) + ") out of range");
    }
    Tensor img(Shape{lf.height(), lf.width(), lf.channels()});
    for (Index y = 0; y < lf.height(); ++y) {
        for (Index x = 0; x < lf.width(); ++x) {
            for (Index c = 0; c < lf.channels(); ++c) {
                img[(y * lf.width() + x) * lf.channels() + c] = lf(y, x, view.rho, view.tau, c);
            }
        }
    }
    return img;
}

Tensor extract_api(const LightField4D& lf, Index y, Index x) {
    if (y < 0 || y >= lf.height() || x < 0 || x >= lf.width()) throw RangeError("spatial index out of range");
    Tensor api(Shape{lf.angular_rho(), lf.angular_tau(), lf.channels()});
    const Index block = lf.angular_rho() * lf.angular_tau() * lf.channels();
    std::copy_n(lf.data().data() + (y * lf.width() + x) * block, block, api.data());
    return api;
}

LightField4D assemble_from_sais(std::span<const Tensor> sais, Index angular_rho, Index angular_tau,
                                ColorSpace color_space) {
    require(static_cast<Index>(sais.size()) == angular_rho * angular_tau, "SAI count does not match the angular grid");
    const Shape& s = sais.front().shape();
    require(s.size() == 3, "SAIs must be (H, W, C)");
    LightField4D lf(s[0], s[1], angular_rho, angular_tau, s[2], color_space);
    for (Index r = 0; r < angular_rho; ++r) {
        for (Index t = 0; t < angular_tau; ++t) {
            const Tensor& img = sais[static_cast<std::size_t>(r * angular_tau + t)];
            require(img.shape() == s, "SAIs must share one shape");
            for (Index y = 0; y < s[0]; ++y) {
                for (Index x = 0; x < s[1]; ++x) {
                    for (Index c = 0; c < s[2]; ++c) lf(y, x, r, t, c) = img[(y * s[1] + x) * s[2] + c];
                }
            }
        }
    }
    return lf;
}

std::vector<EPIVolume> slice(const LightField4D& lf, AngularAxis axis) {
    require(lf.channels() == 1, "slice requires a single-channel light field; dispatch per channel");
    const Index H = lf.height(), W = lf.width(), Ar = lf.angular_rho(), At = lf.angular_tau();
    std::vector<EPIVolume> volumes;
    if (axis == AngularAxis::Tau) {
        volumes.reserve(static_cast<std::size_t>(At));
        for (Index t = 0; t < At; ++t) {
            Tensor v(Shape{W, Ar, H});
            for (Index x = 0; x < W; ++x)
                for (Index r = 0; r < Ar; ++r)
                    for (Index y = 0; y < H; ++y) v[(x * Ar + r) * H + y] = lf(y, x, r, t);
            volumes.emplace_back(std::move(v), Orientation::Horizontal, t);
        }
    } else {
        volumes.reserve(static_cast<std::size_t>(Ar));
        for (Index r = 0; r < Ar; ++r) {
            Tensor v(Shape{H, At, W});
            for (Index y = 0; y < H; ++y)
                for (Index t = 0; t < At; ++t)
                    for (Index x = 0; x < W; ++x) v[(y * At + t) * W + x] = lf(y, x, r, t);
            volumes.emplace_back(std::move(v), Orientation::Vertical, r);
        }
    }
    return volumes;
}

LightField4D merge(std::span<const EPIVolume> volumes, AngularAxis axis) {
    require(!volumes.empty(), "merge needs at least one volume");
    const Orientation expected = axis == AngularAxis::Tau ? Orientation::Horizontal : Orientation::Vertical;
    const Shape& shape = volumes.front().data().shape();
    const auto n = static_cast<Index>(volumes.size());
    for (Index i = 0; i < n; ++i) {
        const EPIVolume& v = volumes[static_cast<std::size_t>(i)];
        require(v.orientation() == expected, "merge: volume orientation does not match the merge axis");
        require(v.data().shape() == shape, "merge: inconsistent volume shapes " + shape_string(v.data().shape()) +
                                               " vs " + shape_string(shape));
        require(v.fixed_index() == i, "merge: volumes must be ordered by their fixed index");
    }
    if (axis == AngularAxis::Tau) {
        const Index W = shape[0], Ar = shape[1], H = shape[2];
        LightField4D lf(H, W, Ar, n, 1, ColorSpace::Y);
        for (Index t = 0; t < n; ++t) {
            const Tensor& v = volumes[static_cast<std::size_t>(t)].data();
            for (Index x = 0; x < W; ++x)
                for (Index r = 0; r < Ar; ++r)
                    for (Index y = 0; y < H; ++y) lf(y, x, r, t) = v[(x * Ar + r) * H + y];
        }
        return lf;
    }
    const Index H = shape[0], At = shape[1], W = shape[2];
    LightField4D lf(H, W, n, At, 1, ColorSpace::Y);
    for (Index r = 0; r < n; ++r) {
        const Tensor& v = volumes[static_cast<std::size_t>(r)].data();
        for (Index y = 0; y < H; ++y)
            for (Index t = 0; t < At; ++t)
                for (Index x = 0; x < W; ++x) lf(y, x, r, t) = v[(y * At + t) * W + x];
    }
    return lf;
}

LightField4D rgb_to_ycbcr(const LightField4D& lf) {
    require(lf.color_space() == ColorSpace::RGB, "rgb_to_ycbcr expects an RGB light field");
    LightField4D out = like(lf, 3, ColorSpace::YCbCr);
    const Eigen::Matrix3d& m = rgb_to_ycbcr_matrix();
    const float* src = lf.data().data();
    float* dst = out.data().data();
    for (Index i = 0; i < lf.data().size(); i += 3) {
        const Eigen::Vector3d rgb(src[i], src[i + 1], src[i + 2]);
        const Eigen::Vector3d ycc = m * rgb + kChromaOffset;
        for (int k = 0; k < 3; ++k) dst[i + k] = static_cast<float>(ycc[k]);
    }
    return out;
}

LightField4D ycbcr_to_rgb(const LightField4D& lf) {
    require(lf.color_space() == ColorSpace::YCbCr, "ycbcr_to_rgb expects a YCbCr light field");
    LightField4D out = like(lf, 3, ColorSpace::RGB);
    const Eigen::Matrix3d& m = ycbcr_to_rgb_matrix();
    const float* src = lf.data().data();
    float* dst = out.data().data();
    for (Index i = 0; i < lf.data().size(); i += 3) {
        const Eigen::Vector3d ycc(src[i], src[i + 1], src[i + 2]);
        const Eigen::Vector3d rgb = m * (ycc - kChromaOffset);
        for (int k = 0; k < 3; ++k) dst[i + k] = static_cast<float>(rgb[k]);
    }
    return out;
}

LightField4D luma(const LightField4D& lf) {
    switch (lf.color_space()) {
    case ColorSpace::Y: return lf;
    case ColorSpace::YCbCr: return extract_channel(lf, 0);
    case ColorSpace::RGB: return extract_channel(rgb_to_ycbcr(lf), 0);
    }
    return lf;
}

LightField4D crop_central_views(const LightField4D& lf, Index target) {
    require(target >= 1, "target angular size must be positive");
    const Index Ar = lf.angular_rho(), At = lf.angular_tau();
    require(target <= Ar && target <= At, "cannot crop " + std::to_string(Ar) + "x" + std::to_string(At) + " views to " +
                                              std::to_string(target) + "x" + std::to_string(target));
    require((Ar - target) % 2 == 0 && (At - target) % 2 == 0, "central crop must be symmetric about the center view");
    const Index r0 = (Ar - target) / 2, t0 = (At - target) / 2;
    LightField4D out(lf.height(), lf.width(), target, target, lf.channels(), lf.color_space());
    for (Index y = 0; y < lf.height(); ++y)
        for (Index x = 0; x < lf.width(); ++x)
            for (Index r = 0; r < target; ++r)
                for (Index t = 0; t < target; ++t)
                    for (Index c = 0; c < lf.channels(); ++c) out(y, x, r, t, c) = lf(y, x, r + r0, t + t0, c);
    return out;
}

LightField4D extract_channel(const LightField4D& lf, Index c) {
    if (c < 0 || c >= lf.channels()) throw RangeError("channel index out of range");
    LightField4D out = like(lf, 1, ColorSpace::Y);
    const Index C = lf.channels();
    for (Index i = 0; i < out.data().size(); ++i) out.data()[i] = lf.data()[i * C + c];
    return out;
}

LightField4D join_channels(std::span<const LightField4D> channels, ColorSpace color_space) {
    require(!channels.empty(), "join_channels needs at least one channel");
    const auto C = static_cast<Index>(channels.size());
    const LightField4D& first = channels.front();
    LightField4D out = like(first, C, color_space);
    for (Index c = 0; c < C; ++c) {
        const LightField4D& ch = channels[static_cast<std::size_t>(c)];
        require(ch.channels() == 1 && ch.data().shape() == first.data().shape(), "join_channels: shape mismatch");
        for (Index i = 0; i < ch.data().size(); ++i) out.data()[i * C + c] = ch.data()[i];
    }
    return out;
}

LightField4D clip_unit(const LightField4D& lf) {
    LightField4D out = lf;
    for (float& v : out.data().values()) v = std::clamp(v, 0.0f, 1.0f);
    return out;
}

} // namespace lfsr
