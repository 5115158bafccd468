#include "lfsr/resample.hpp"

#include "lfsr/container.hpp"
#include "lfsr/error.hpp"
#include "lfsr/ops.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace lfsr {
namespace {

struct AxisWeights {
    // For output position u: taps [offsets[u], offsets[u+1]) in index/weight.
    std::vector<std::size_t> offsets;
    std::vector<Index> index;
    std::vector<double> weight;
};

AxisWeights axis_weights(Index in_len, Index out_len, bool antialias) {
    const double scale = static_cast<double>(out_len) / static_cast<double>(in_len);
    const bool stretch = antialias && scale < 1.0;
    const double kernel_width = stretch ? 4.0 / scale : 4.0;
    const auto taps = static_cast<Index>(std::ceil(kernel_width)) + 2;

    AxisWeights w;
    w.offsets.push_back(0);
    std::vector<double> local(static_cast<std::size_t>(taps));
    for (Index u = 1; u <= out_len; ++u) {
        // 1-based input coordinate of output sample u under half-pixel centers.
        const double x = static_cast<double>(u) / scale + 0.5 * (1.0 - 1.0 / scale);
        const auto left = static_cast<Index>(std::floor(x - kernel_width / 2.0));
        double total = 0.0;
        for (Index k = 0; k < taps; ++k) {
            const double dist = x - static_cast<double>(left + k);
            local[static_cast<std::size_t>(k)] = stretch ? scale * keys_cubic(scale * dist) : keys_cubic(dist);
            total += local[static_cast<std::size_t>(k)];
        }
        for (Index k = 0; k < taps; ++k) {
            const double wk = local[static_cast<std::size_t>(k)] / total;
            if (wk == 0.0) continue;
            w.index.push_back(std::clamp<Index>(left + k, 1, in_len) - 1);
            w.weight.push_back(wk);
        }
        w.offsets.push_back(w.index.size());
    }
    return w;
}

Tensor transpose2d(const Tensor& img) {
    const std::array<Index, 2> perm{1, 0};
    return ops::permute(img, perm);
}

} // namespace

double keys_cubic(double x) {
    constexpr double a = -0.5;
    const double ax = std::abs(x);
    const double ax2 = ax * ax, ax3 = ax2 * ax;
    if (ax <= 1.0) return (a + 2.0) * ax3 - (a + 3.0) * ax2 + 1.0;
    if (ax < 2.0) return a * ax3 - 5.0 * a * ax2 + 8.0 * a * ax - 4.0 * a;
    return 0.0;
}

Tensor bicubic_resize(const Tensor& image, Index out_h, Index out_w, bool antialias) {
    require(image.rank() == 2 || image.rank() == 3, "bicubic_resize expects (h, w) or (h, w, c)");
    require(out_h >= 1 && out_w >= 1, "bicubic_resize output extents must be at least 1");
    const Index h = image.dim(0), w = image.dim(1), c = image.rank() == 3 ? image.dim(2) : 1;
    const AxisWeights wy = axis_weights(h, out_h, antialias);
    const AxisWeights wx = axis_weights(w, out_w, antialias);

    // Height pass first, then width, both in double.
    std::vector<double> tmp(static_cast<std::size_t>(out_h * w * c), 0.0);
    for (Index u = 0; u < out_h; ++u) {
        for (std::size_t t = wy.offsets[static_cast<std::size_t>(u)]; t < wy.offsets[static_cast<std::size_t>(u) + 1]; ++t) {
            const double wt = wy.weight[t];
            const float* src = image.data() + wy.index[t] * w * c;
            double* dst = tmp.data() + u * w * c;
            for (Index i = 0; i < w * c; ++i) dst[i] += wt * src[i];
        }
    }
    Shape out_shape = image.rank() == 3 ? Shape{out_h, out_w, c} : Shape{out_h, out_w};
    Tensor out(out_shape);
    for (Index u = 0; u < out_h; ++u) {
        for (Index v = 0; v < out_w; ++v) {
            for (Index ch = 0; ch < c; ++ch) {
                double acc = 0.0;
                for (std::size_t t = wx.offsets[static_cast<std::size_t>(v)]; t < wx.offsets[static_cast<std::size_t>(v) + 1]; ++t) {
                    acc += wx.weight[t] * tmp[static_cast<std::size_t>((u * w + wx.index[t]) * c + ch)];
                }
                out[(u * out_w + v) * c + ch] = static_cast<float>(std::clamp(acc, 0.0, 1.0));
            }
        }
    }
    return out;
}

LightField4D lf_spatial_downsample(const LightField4D& lf, int factor, bool antialias) {
    require(factor >= 1, "spatial factor must be at least 1");
    require(lf.height() % factor == 0 && lf.width() % factor == 0,
            "light field extents " + std::to_string(lf.height()) + "x" + std::to_string(lf.width()) +
                " are not divisible by " + std::to_string(factor));
    const Index oh = lf.height() / factor, ow = lf.width() / factor;
    std::vector<Tensor> views;
    for (Index r = 0; r < lf.angular_rho(); ++r) {
        for (Index t = 0; t < lf.angular_tau(); ++t) views.push_back(bicubic_resize(extract_sai(lf, {r, t}), oh, ow, antialias));
    }
    return assemble_from_sais(views, lf.angular_rho(), lf.angular_tau(), lf.color_space());
}

LightField4D angular_decimate(const LightField4D& lf) {
    const Index Ar = lf.angular_rho(), At = lf.angular_tau();
    require(Ar % 2 == 1 && At % 2 == 1, "angular decimation needs odd angular extents");
    const Index nr = Ar / 2 + 1, nt = At / 2 + 1;
    LightField4D out(lf.height(), lf.width(), nr, nt, lf.channels(), lf.color_space());
    for (Index y = 0; y < lf.height(); ++y)
        for (Index x = 0; x < lf.width(); ++x)
            for (Index r = 0; r < nr; ++r)
                for (Index t = 0; t < nt; ++t)
                    for (Index c = 0; c < lf.channels(); ++c) out(y, x, r, t, c) = lf(y, x, 2 * r, 2 * t, c);
    return out;
}

LightField4D degrade(const LightField4D& lf, const DegradeSpec& spec) {
    LightField4D out = spec.spatial_factor > 1 ? lf_spatial_downsample(lf, spec.spatial_factor, spec.antialias) : lf;
    if (spec.angular_decimate) out = angular_decimate(out);
    return out;
}

EPIVolume pssr_volume(const EPIVolume& volume, int factor, PssrMethod method, const EPIVolume* external) {
    require(factor >= 1, "spatial factor must be at least 1");
    const Index ts1 = volume.s1() * factor, ts2 = volume.s2() * factor;
    if (method == PssrMethod::External) {
        require(external != nullptr, "external PSSR requires a pre-up-sampled volume");
        require(external->data().shape() == Shape({ts1, volume.angular(), ts2}),
                "external volume shape " + shape_string(external->data().shape()) + " does not match target " +
                    shape_string(Shape{ts1, volume.angular(), ts2}));
        return EPIVolume(external->data(), volume.orientation(), volume.fixed_index());
    }
    if (factor == 1) return volume;
    std::vector<Tensor> slices;
    slices.reserve(static_cast<std::size_t>(volume.angular()));
    for (Index a = 0; a < volume.angular(); ++a) {
        const Tensor img = volume.a_slice(a);
        if (volume.orientation() == Orientation::Horizontal) {
            // Horizontal slices are (x, y); resize in SAI orientation (y, x).
            slices.push_back(transpose2d(bicubic_resize(transpose2d(img), ts2, ts1)));
        } else {
            slices.push_back(bicubic_resize(img, ts1, ts2));
        }
    }
    return EPIVolume::from_a_slices(slices, volume.orientation(), volume.fixed_index());
}

std::vector<Index> patch_origins(Index length, Index size, Index stride) {
    std::vector<Index> origins;
    for (Index p = 0; p + size <= length; p += stride) origins.push_back(p);
    return origins;
}

std::vector<TrainingPatch> extract_training_patches(const LightField4D& lf, const PatchSpec& spec,
                                                    const std::string& scene) {
    require(spec.size >= spec.stride && spec.stride > 0, "patch size must be >= stride > 0");
    require(lf.channels() == 1, "training patches are cut from single-channel (Y) light fields");
    const Index Ar = lf.angular_rho(), At = lf.angular_tau();
    const Index cr = Ar / 2, ct = At / 2;
    std::vector<TrainingPatch> patches;
    for (Index y0 : patch_origins(lf.height(), spec.size, spec.stride)) {
        for (Index x0 : patch_origins(lf.width(), spec.size, spec.stride)) {
            double s = 0.0, s2 = 0.0;
            for (Index y = 0; y < spec.size; ++y) {
                for (Index x = 0; x < spec.size; ++x) {
                    const double v = lf(y0 + y, x0 + x, cr, ct);
                    s += v;
                    s2 += v * v;
                }
            }
            const double n = static_cast<double>(spec.size * spec.size);
            const double var = std::max(0.0, s2 / n - (s / n) * (s / n));
            if (std::sqrt(var) < spec.plain_reject_threshold) continue;

            LightField4D p(spec.size, spec.size, Ar, At, 1, lf.color_space());
            const Index row = Ar * At;
            for (Index y = 0; y < spec.size; ++y) {
                for (Index x = 0; x < spec.size; ++x) {
                    std::copy_n(lf.data().data() + ((y0 + y) * lf.width() + (x0 + x)) * row, row,
                                p.data().data() + (y * spec.size + x) * row);
                }
            }
            patches.push_back(TrainingPatch{std::move(p), scene, y0, x0});
        }
    }
    return patches;
}

void save_patch_set(const std::filesystem::path& dir, const std::vector<TrainingPatch>& patches) {
    std::filesystem::create_directories(dir);
    nlohmann::json index = nlohmann::json::array();
    for (std::size_t i = 0; i < patches.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "patch_%05zu.lfvw", i);
        WeightContainer c;
        c.put("lf", patches[i].lf.data());
        c.metadata = {{"color_space", to_string(patches[i].lf.color_space())}};
        c.save(dir / name);
        index.push_back({{"file", name}, {"scene", patches[i].scene}, {"y", patches[i].y}, {"x", patches[i].x}});
    }
    std::ofstream out(dir / "index.json");
    if (!out) throw IoError("cannot write patch index in " + dir.string());
    out << index.dump(2) << '\n';
}

std::vector<TrainingPatch> load_patch_set(const std::filesystem::path& dir) {
    std::ifstream in(dir / "index.json");
    if (!in) throw IoError("missing index.json in " + dir.string());
    nlohmann::json index;
    in >> index;
    std::vector<TrainingPatch> patches;
    for (const auto& j : index) {
        const WeightContainer c = WeightContainer::load(dir / j.at("file").get<std::string>());
        const ColorSpace cs = color_space_from_string(c.metadata.value("color_space", std::string("y")));
        patches.push_back(TrainingPatch{LightField4D(c.tensor("lf"), cs), j.at("scene").get<std::string>(),
                                        j.at("y").get<Index>(), j.at("x").get<Index>()});
    }
    return patches;
}

} // namespace lfsr
