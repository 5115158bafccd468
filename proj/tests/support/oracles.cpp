#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace lfsr::testing {

Tensor random_tensor(const Shape& shape, Rng& rng, float lo, float hi) {
    std::uniform_real_distribution<float> u(lo, hi);
    Tensor t(shape);
    for (float& v : t.values()) v = u(rng);
    return t;
}

Tensor random_away_from_zero(const Shape& shape, Rng& rng, float margin, float hi) {
    std::uniform_real_distribution<float> u(margin, hi);
    std::bernoulli_distribution sign(0.5);
    Tensor t(shape);
    for (float& v : t.values()) v = sign(rng) ? u(rng) : -u(rng);
    return t;
}

LightField4D random_lightfield(Index h, Index w, Index ar, Index at, Index c, Rng& rng) {
    const ColorSpace cs = c == 1 ? ColorSpace::Y : ColorSpace::RGB;
    return LightField4D(random_tensor({h, w, ar, at, c}, rng, 0.0f, 1.0f), cs);
}

Tensor naive_conv3d(const Tensor& in, const Tensor& k, const Tensor& b) {
    const Index S1 = in.dim(0), A = in.dim(1), S2 = in.dim(2), Ci = in.dim(3);
    const Index K1 = k.dim(0), K2 = k.dim(1), K3 = k.dim(2), Co = k.dim(4);
    Tensor out({S1, A, S2, Co});
    for (Index i = 0; i < S1; ++i)
        for (Index a = 0; a < A; ++a)
            for (Index j = 0; j < S2; ++j)
                for (Index o = 0; o < Co; ++o) {
                    double s = b[o];
                    for (Index p = 0; p < K1; ++p)
                        for (Index q = 0; q < K2; ++q)
                            for (Index r = 0; r < K3; ++r) {
                                const Index ii = i + p - (K1 - 1) / 2;
                                const Index aa = a + q - (K2 - 1) / 2;
                                const Index jj = j + r - (K3 - 1) / 2;
                                if (ii < 0 || ii >= S1 || aa < 0 || aa >= A || jj < 0 || jj >= S2) continue;
                                for (Index c = 0; c < Ci; ++c) {
                                    s += static_cast<double>(in.at({ii, aa, jj, c})) * k.at({p, q, r, c, o});
                                }
                            }
                    out.at({i, a, j, o}) = static_cast<float>(s);
                }
    return out;
}

Tensor naive_conv2d(const Tensor& in, const Tensor& k, const Tensor& b) {
    const Index H = in.dim(0), W = in.dim(1), Ci = in.dim(2);
    const Index KH = k.dim(0), KW = k.dim(1), Co = k.dim(3);
    Tensor out({H, W, Co});
    for (Index y = 0; y < H; ++y)
        for (Index x = 0; x < W; ++x)
            for (Index o = 0; o < Co; ++o) {
                double s = b[o];
                for (Index p = 0; p < KH; ++p)
                    for (Index q = 0; q < KW; ++q) {
                        const Index yy = y + p - (KH - 1) / 2, xx = x + q - (KW - 1) / 2;
                        if (yy < 0 || yy >= H || xx < 0 || xx >= W) continue;
                        for (Index c = 0; c < Ci; ++c) s += static_cast<double>(in.at({yy, xx, c})) * k.at({p, q, c, o});
                    }
                out.at({y, x, o}) = static_cast<float>(s);
            }
    return out;
}

namespace {

// Decomposes a flat index into a multi-index.
std::vector<Index> unravel(Index flat, const Shape& shape) {
    std::vector<Index> idx(shape.size());
    for (std::size_t d = shape.size(); d-- > 0;) {
        idx[d] = flat % shape[d];
        flat /= shape[d];
    }
    return idx;
}

Index ravel(const std::vector<Index>& idx, const Shape& shape) {
    Index flat = 0;
    for (std::size_t d = 0; d < shape.size(); ++d) flat = flat * shape[d] + idx[d];
    return flat;
}

} // namespace

Tensor naive_pool(const Tensor& x, const std::vector<Index>& axes, ops::PoolMode mode) {
    Shape out_shape = x.shape();
    for (Index a : axes) out_shape[static_cast<std::size_t>(a)] = 1;
    Tensor out(out_shape);
    std::vector<double> acc(static_cast<std::size_t>(out.size()), mode == ops::PoolMode::Max ? -1e300 : 0.0);
    for (Index f = 0; f < x.size(); ++f) {
        std::vector<Index> idx = unravel(f, x.shape());
        for (Index a : axes) idx[static_cast<std::size_t>(a)] = 0;
        const auto o = static_cast<std::size_t>(ravel(idx, out_shape));
        if (mode == ops::PoolMode::Max) acc[o] = std::max(acc[o], static_cast<double>(x[f]));
        else acc[o] += x[f];
    }
    const double count = static_cast<double>(x.size() / out.size());
    for (Index i = 0; i < out.size(); ++i) {
        out[i] = static_cast<float>(mode == ops::PoolMode::Max ? acc[static_cast<std::size_t>(i)]
                                                               : acc[static_cast<std::size_t>(i)] / count);
    }
    return out;
}

Tensor naive_dense(const Tensor& x, const Tensor& w, const Tensor& b) {
    const Index n = w.dim(0), m = w.dim(1);
    Tensor out({m});
    for (Index j = 0; j < m; ++j) {
        double s = b[j];
        for (Index i = 0; i < n; ++i) s += static_cast<double>(x[i]) * w.at({i, j});
        out[j] = static_cast<float>(s);
    }
    return out;
}

Tensor naive_concat(const std::vector<Tensor>& parts, Index axis) {
    Shape shape = parts[0].shape();
    const auto ax = static_cast<std::size_t>(axis);
    shape[ax] = 0;
    for (const Tensor& p : parts) shape[ax] += p.dim(axis);
    Tensor out(shape);
    Index offset = 0;
    for (const Tensor& p : parts) {
        for (Index f = 0; f < p.size(); ++f) {
            std::vector<Index> idx = unravel(f, p.shape());
            idx[ax] += offset;
            out[ravel(idx, shape)] = p[f];
        }
        offset += p.dim(axis);
    }
    return out;
}

Tensor naive_broadcast_mul(const Tensor& x, const Tensor& w) {
    Tensor out(x.shape());
    for (Index f = 0; f < x.size(); ++f) {
        std::vector<Index> idx = unravel(f, x.shape());
        for (std::size_t d = 0; d < idx.size(); ++d)
            if (w.shape()[d] == 1) idx[d] = 0;
        out[f] = x[f] * w[ravel(idx, w.shape())];
    }
    return out;
}

double max_rel_diff(const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) return INFINITY;
    double worst = 0.0;
    for (Index i = 0; i < a.size(); ++i) {
        worst = std::max(worst, std::abs(static_cast<double>(a[i]) - b[i]) / std::max(std::abs(static_cast<double>(b[i])), 1.0));
    }
    return worst;
}

GradCheckStats gradient_check(const ParamStore& params, const std::function<ag::Var(GradTape&)>& loss,
                              const std::function<double(const ref::DParams&)>& reference, Rng& rng, double h,
                              std::size_t per_tensor) {
    GradMap analytic;
    double engine_loss = 0.0;
    {
        GradTape tape(params, true);
        const ag::Var l = loss(tape);
        engine_loss = l.item();
        analytic = tape.backward(l);
    }
    ref::DParams dp = ref::to_double(params);
    GradCheckStats stats;
    const double ref_loss = reference(dp);
    stats.forward_rel = std::abs(engine_loss - ref_loss) / std::max(std::abs(ref_loss), 1.0);
    std::vector<double> rels;
    for (const ParamEntry& entry : params.entries()) {
        const Tensor& g = analytic.at(entry.name);
        std::vector<Index> coords(static_cast<std::size_t>(g.size()));
        std::iota(coords.begin(), coords.end(), Index{0});
        if (coords.size() > per_tensor) {
            std::shuffle(coords.begin(), coords.end(), rng);
            coords.resize(per_tensor);
        }
        double gmax = 0.0;
        for (float v : g.values()) gmax = std::max(gmax, static_cast<double>(std::abs(v)));
        const double floor = std::max(1e-6 * gmax, 1e-12);
        for (Index c : coords) {
            double& value = dp.at(entry.name).v[static_cast<std::size_t>(c)];
            const double original = value;
            value = original + h;
            const double up = reference(dp);
            value = original - h;
            const double down = reference(dp);
            value = original;
            const double numeric = (up - down) / (2.0 * h);
            const double a = g[c];
            const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), floor});
            rels.push_back(rel);
            if (rel > stats.max_rel) {
                stats.max_rel = rel;
                stats.worst = entry.name + "[" + std::to_string(c) + "] analytic " + std::to_string(a) + " numeric " +
                              std::to_string(numeric);
            }
        }
    }
    stats.coordinates = rels.size();
    if (!rels.empty()) {
        std::nth_element(rels.begin(), rels.begin() + static_cast<std::ptrdiff_t>(rels.size() / 2), rels.end());
        stats.median_rel = rels[rels.size() / 2];
    }
    return stats;
}

} // namespace lfsr::testing
