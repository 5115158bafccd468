#include "lfsr/ops.hpp"

#include "lfsr/error.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

namespace lfsr::ops {
namespace {

using RowMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;
using ConstVecMap = Eigen::Map<const Eigen::RowVectorXf>;

struct ConvGeometry {
    Index d0, d1, d2, cin;
    Index k0, k1, k2, cout;
    Index patch; // k0 * k1 * k2 * cin
    Index voxels;

    bool pointwise() const { return k0 == 1 && k1 == 1 && k2 == 1; }
    Index block_rows() const { return std::max<Index>(1, (Index{1} << 20) / patch); }
};

ConvGeometry conv3d_geometry(const Tensor& input, const Tensor& kernel) {
    require(input.rank() == 4, "conv3d input must be (s1, a, s2, Cin), got " + shape_string(input.shape()));
    require(kernel.rank() == 5,
            "conv3d kernel must be (k1, k2, k3, Cin, Cout), got " + shape_string(kernel.shape()));
    ConvGeometry g{};
    g.d0 = input.dim(0);
    g.d1 = input.dim(1);
    g.d2 = input.dim(2);
    g.cin = input.dim(3);
    g.k0 = kernel.dim(0);
    g.k1 = kernel.dim(1);
    g.k2 = kernel.dim(2);
    g.cout = kernel.dim(4);
    require(kernel.dim(3) == g.cin, "conv3d channel mismatch: input has " + std::to_string(g.cin) +
                                        ", kernel expects " + std::to_string(kernel.dim(3)));
    require(g.k0 % 2 == 1 && g.k1 % 2 == 1 && g.k2 % 2 == 1, "conv3d kernel extents must be odd");
    g.patch = g.k0 * g.k1 * g.k2 * g.cin;
    g.voxels = g.d0 * g.d1 * g.d2;
    return g;
}

// Gathers zero-padded receptive fields for voxels [begin, end) into a row-major matrix.
void im2col(const float* in, const ConvGeometry& g, Index begin, Index end, float* col) {
    const Index h0 = g.k0 / 2, h1 = g.k1 / 2, h2 = g.k2 / 2;
    const std::size_t chunk = static_cast<std::size_t>(g.cin) * sizeof(float);
    for (Index v = begin; v < end; ++v) {
        const Index i = v / (g.d1 * g.d2);
        const Index j = (v / g.d2) % g.d1;
        const Index k = v % g.d2;
        float* dst = col + (v - begin) * g.patch;
        for (Index p0 = 0; p0 < g.k0; ++p0) {
            const Index ii = i + p0 - h0;
            for (Index p1 = 0; p1 < g.k1; ++p1) {
                const Index jj = j + p1 - h1;
                for (Index p2 = 0; p2 < g.k2; ++p2, dst += g.cin) {
                    const Index kk = k + p2 - h2;
                    if (ii < 0 || ii >= g.d0 || jj < 0 || jj >= g.d1 || kk < 0 || kk >= g.d2) {
                        std::memset(dst, 0, chunk);
                    } else {
                        std::memcpy(dst, in + ((ii * g.d1 + jj) * g.d2 + kk) * g.cin, chunk);
                    }
                }
            }
        }
    }
}

// Scatter-adds column gradients back onto the input gradient.
void col2im(const float* col, const ConvGeometry& g, Index begin, Index end, float* grad_in) {
    const Index h0 = g.k0 / 2, h1 = g.k1 / 2, h2 = g.k2 / 2;
    for (Index v = begin; v < end; ++v) {
        const Index i = v / (g.d1 * g.d2);
        const Index j = (v / g.d2) % g.d1;
        const Index k = v % g.d2;
        const float* src = col + (v - begin) * g.patch;
        for (Index p0 = 0; p0 < g.k0; ++p0) {
            const Index ii = i + p0 - h0;
            for (Index p1 = 0; p1 < g.k1; ++p1) {
                const Index jj = j + p1 - h1;
                for (Index p2 = 0; p2 < g.k2; ++p2, src += g.cin) {
                    const Index kk = k + p2 - h2;
                    if (ii < 0 || ii >= g.d0 || jj < 0 || jj >= g.d1 || kk < 0 || kk >= g.d2) continue;
                    float* dst = grad_in + ((ii * g.d1 + jj) * g.d2 + kk) * g.cin;
                    for (Index c = 0; c < g.cin; ++c) dst[c] += src[c];
                }
            }
        }
    }
}

Shape conv2d_as_3d(const Shape& s) { return Shape{s[0], 1, s[1], s[2]}; }

void check_same_shape(const Tensor& a, const Tensor& b, const char* what) {
    require(a.shape() == b.shape(), std::string(what) + ": shape mismatch " + shape_string(a.shape()) +
                                        " vs " + shape_string(b.shape()));
}

// Offset into `w` for every element of a tensor with shape `full`; broadcast axes map to 0.
std::vector<Index> broadcast_offsets(const Shape& full, const Shape& w) {
    const Shape w_strides = strides_of(w);
    Shape eff(full.size(), 0);
    for (std::size_t a = 0; a < full.size(); ++a) eff[a] = w[a] == 1 ? 0 : w_strides[a];
    const Index n = numel(full);
    std::vector<Index> offsets(static_cast<std::size_t>(n));
    std::vector<Index> counter(full.size(), 0);
    Index off = 0;
    for (Index i = 0; i < n; ++i) {
        offsets[static_cast<std::size_t>(i)] = off;
        for (Index a = static_cast<Index>(full.size()) - 1; a >= 0; --a) {
            const auto ua = static_cast<std::size_t>(a);
            ++counter[ua];
            off += eff[ua];
            if (counter[ua] < full[ua]) break;
            off -= eff[ua] * counter[ua];
            counter[ua] = 0;
        }
    }
    return offsets;
}

Shape reduced_shape(const Shape& shape, std::span<const Index> axes) {
    require(!axes.empty(), "pool_over_axes: empty reduction");
    Shape out = shape;
    std::vector<bool> seen(shape.size(), false);
    for (Index a : axes) {
        require(a >= 0 && a < static_cast<Index>(shape.size()), "pool_over_axes: axis out of range");
        require(!seen[static_cast<std::size_t>(a)], "pool_over_axes: duplicate axis");
        seen[static_cast<std::size_t>(a)] = true;
        out[static_cast<std::size_t>(a)] = 1;
    }
    return out;
}

} // namespace

Tensor conv3d_same(const Tensor& input, const Tensor& kernel, const Tensor& bias) {
    const ConvGeometry g = conv3d_geometry(input, kernel);
    require(bias.size() == g.cout, "conv3d bias length must equal Cout");
    Tensor out(Shape{g.d0, g.d1, g.d2, g.cout});
    const ConstMatMap k(kernel.data(), g.patch, g.cout);
    const ConstVecMap b(bias.data(), g.cout);

    if (g.pointwise()) {
        const ConstMatMap x(input.data(), g.voxels, g.cin);
        MatMap y(out.data(), g.voxels, g.cout);
        y.noalias() = x * k;
        y.rowwise() += b;
        return out;
    }

    const Index block = g.block_rows();
    std::vector<float> col(static_cast<std::size_t>(std::min(block, g.voxels) * g.patch));
    for (Index begin = 0; begin < g.voxels; begin += block) {
        const Index end = std::min(g.voxels, begin + block);
        const Index rows = end - begin;
        im2col(input.data(), g, begin, end, col.data());
        const ConstMatMap c(col.data(), rows, g.patch);
        MatMap y(out.data() + begin * g.cout, rows, g.cout);
        y.noalias() = c * k;
        y.rowwise() += b;
    }
    return out;
}

ConvGrads conv3d_same_backward(const Tensor& input, const Tensor& kernel, const Tensor& grad_out,
                               bool need_input_grad) {
    const ConvGeometry g = conv3d_geometry(input, kernel);
    require(grad_out.shape() == Shape({g.d0, g.d1, g.d2, g.cout}), "conv3d backward: grad shape mismatch");
    ConvGrads grads{Tensor(input.shape()), Tensor(kernel.shape()), Tensor(Shape{g.cout})};
    if (!need_input_grad) grads.input = Tensor();

    const ConstMatMap k(kernel.data(), g.patch, g.cout);
    const ConstMatMap gy(grad_out.data(), g.voxels, g.cout);
    MatMap gk(grads.kernel.data(), g.patch, g.cout);
    Eigen::Map<Eigen::RowVectorXf>(grads.bias.data(), g.cout) = gy.colwise().sum();

    if (g.pointwise()) {
        const ConstMatMap x(input.data(), g.voxels, g.cin);
        gk.noalias() = x.transpose() * gy;
        if (need_input_grad) {
            MatMap gx(grads.input.data(), g.voxels, g.cin);
            gx.noalias() = gy * k.transpose();
        }
        return grads;
    }

    const Index block = g.block_rows();
    const auto col_size = static_cast<std::size_t>(std::min(block, g.voxels) * g.patch);
    std::vector<float> col(col_size);
    std::vector<float> gcol(need_input_grad ? col_size : 0);
    for (Index begin = 0; begin < g.voxels; begin += block) {
        const Index end = std::min(g.voxels, begin + block);
        const Index rows = end - begin;
        im2col(input.data(), g, begin, end, col.data());
        const ConstMatMap c(col.data(), rows, g.patch);
        const ConstMatMap gyb(grad_out.data() + begin * g.cout, rows, g.cout);
        gk.noalias() += c.transpose() * gyb;
        if (need_input_grad) {
            MatMap gc(gcol.data(), rows, g.patch);
            gc.noalias() = gyb * k.transpose();
            col2im(gcol.data(), g, begin, end, grads.input.data());
        }
    }
    return grads;
}

Tensor conv2d_same(const Tensor& input, const Tensor& kernel, const Tensor& bias) {
    require(input.rank() == 3, "conv2d input must be (h, w, Cin), got " + shape_string(input.shape()));
    require(kernel.rank() == 4, "conv2d kernel must be (kh, kw, Cin, Cout)");
    const Shape& ks = kernel.shape();
    Tensor out = conv3d_same(input.reshaped(conv2d_as_3d(input.shape())),
                             kernel.reshaped(Shape{ks[0], 1, ks[1], ks[2], ks[3]}), bias);
    return std::move(out).reshaped(Shape{input.dim(0), input.dim(1), ks[3]});
}

ConvGrads conv2d_same_backward(const Tensor& input, const Tensor& kernel, const Tensor& grad_out,
                               bool need_input_grad) {
    require(input.rank() == 3 && kernel.rank() == 4 && grad_out.rank() == 3, "conv2d backward: rank mismatch");
    const Shape& ks = kernel.shape();
    ConvGrads g = conv3d_same_backward(input.reshaped(conv2d_as_3d(input.shape())),
                                       kernel.reshaped(Shape{ks[0], 1, ks[1], ks[2], ks[3]}),
                                       grad_out.reshaped(conv2d_as_3d(grad_out.shape())), need_input_grad);
    if (need_input_grad) g.input = std::move(g.input).reshaped(input.shape());
    g.kernel = std::move(g.kernel).reshaped(ks);
    return g;
}

Tensor prelu(const Tensor& x, const Tensor& slope) {
    const Index c = x.dim(-1);
    require(slope.size() == c, "prelu slope length must equal the channel extent");
    Tensor y(x.shape());
    const Index n = x.size();
    for (Index i = 0; i < n; ++i) {
        const float v = x[i];
        y[i] = v >= 0.0f ? v : slope[i % c] * v;
    }
    return y;
}

PreluGrads prelu_backward(const Tensor& x, const Tensor& slope, const Tensor& grad_out) {
    check_same_shape(x, grad_out, "prelu backward");
    const Index c = x.dim(-1);
    PreluGrads g{Tensor(x.shape()), Tensor(slope.shape())};
    std::vector<double> gs(static_cast<std::size_t>(c), 0.0);
    for (Index i = 0; i < x.size(); ++i) {
        const float v = x[i];
        if (v >= 0.0f) {
            g.input[i] = grad_out[i];
        } else {
            g.input[i] = slope[i % c] * grad_out[i];
            gs[static_cast<std::size_t>(i % c)] += static_cast<double>(v) * grad_out[i];
        }
    }
    for (Index k = 0; k < c; ++k) g.slope[k] = static_cast<float>(gs[static_cast<std::size_t>(k)]);
    return g;
}

Tensor sigmoid(const Tensor& x) {
    Tensor y(x.shape());
    for (Index i = 0; i < x.size(); ++i) {
        const double v = x[i];
        y[i] = static_cast<float>(v >= 0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v)));
    }
    return y;
}

Tensor sigmoid_backward(const Tensor& y, const Tensor& grad_out) {
    check_same_shape(y, grad_out, "sigmoid backward");
    Tensor g(y.shape());
    for (Index i = 0; i < y.size(); ++i) g[i] = grad_out[i] * y[i] * (1.0f - y[i]);
    return g;
}

Tensor relu(const Tensor& x) {
    Tensor y(x.shape());
    for (Index i = 0; i < x.size(); ++i) y[i] = x[i] > 0.0f ? x[i] : 0.0f;
    return y;
}

Tensor relu_backward(const Tensor& x, const Tensor& grad_out) {
    check_same_shape(x, grad_out, "relu backward");
    Tensor g(x.shape());
    for (Index i = 0; i < x.size(); ++i) g[i] = x[i] > 0.0f ? grad_out[i] : 0.0f;
    return g;
}

Tensor pool_over_axes(const Tensor& x, std::span<const Index> axes, PoolMode mode) {
    const Shape out_shape = reduced_shape(x.shape(), axes);
    const std::vector<Index> target = broadcast_offsets(x.shape(), out_shape);
    const Index m = numel(out_shape);
    if (mode == PoolMode::Avg) {
        std::vector<double> acc(static_cast<std::size_t>(m), 0.0);
        for (Index i = 0; i < x.size(); ++i) acc[static_cast<std::size_t>(target[static_cast<std::size_t>(i)])] += x[i];
        const double count = static_cast<double>(x.size() / m);
        Tensor out(out_shape);
        for (Index j = 0; j < m; ++j) out[j] = static_cast<float>(acc[static_cast<std::size_t>(j)] / count);
        return out;
    }
    Tensor out(out_shape, -std::numeric_limits<float>::infinity());
    for (Index i = 0; i < x.size(); ++i) {
        float& slot = out[target[static_cast<std::size_t>(i)]];
        slot = std::max(slot, x[i]);
    }
    return out;
}

Tensor pool_over_axes_backward(const Tensor& x, std::span<const Index> axes, PoolMode mode,
                               const Tensor& grad_out) {
    const Shape out_shape = reduced_shape(x.shape(), axes);
    require(grad_out.shape() == out_shape, "pool backward: grad shape mismatch");
    const std::vector<Index> target = broadcast_offsets(x.shape(), out_shape);
    const Index m = numel(out_shape);
    Tensor g(x.shape());
    if (mode == PoolMode::Avg) {
        const float inv = 1.0f / static_cast<float>(x.size() / m);
        for (Index i = 0; i < x.size(); ++i) g[i] = grad_out[target[static_cast<std::size_t>(i)]] * inv;
        return g;
    }
    // Gradient routes to the first maximal element of each window.
    const Tensor best = pool_over_axes(x, axes, PoolMode::Max);
    std::vector<bool> taken(static_cast<std::size_t>(m), false);
    for (Index i = 0; i < x.size(); ++i) {
        const Index t = target[static_cast<std::size_t>(i)];
        if (!taken[static_cast<std::size_t>(t)] && x[i] == best[t]) {
            g[i] = grad_out[t];
            taken[static_cast<std::size_t>(t)] = true;
        }
    }
    return g;
}

Tensor dense(const Tensor& x, const Tensor& weight, const Tensor& bias) {
    require(x.rank() == 1 && weight.rank() == 2 && bias.rank() == 1, "dense expects x (n), W (n, m), b (m)");
    const Index n = x.dim(0), m = weight.dim(1);
    require(weight.dim(0) == n && bias.dim(0) == m,
            "dense shape mismatch: x " + shape_string(x.shape()) + ", W " + shape_string(weight.shape()) +
                ", b " + shape_string(bias.shape()));
    Tensor y(Shape{m});
    for (Index j = 0; j < m; ++j) {
        double acc = bias[j];
        for (Index i = 0; i < n; ++i) acc += static_cast<double>(weight[i * m + j]) * x[i];
        y[j] = static_cast<float>(acc);
    }
    return y;
}

DenseGrads dense_backward(const Tensor& x, const Tensor& weight, const Tensor& grad_out) {
    const Index n = x.dim(0), m = weight.dim(1);
    require(grad_out.shape() == Shape({m}), "dense backward: grad shape mismatch");
    DenseGrads g{Tensor(x.shape()), Tensor(weight.shape()), grad_out};
    for (Index i = 0; i < n; ++i) {
        double acc = 0.0;
        for (Index j = 0; j < m; ++j) {
            acc += static_cast<double>(weight[i * m + j]) * grad_out[j];
            g.weight[i * m + j] = x[i] * grad_out[j];
        }
        g.input[i] = static_cast<float>(acc);
    }
    return g;
}

Tensor concat(std::span<const Tensor> parts, Index axis) {
    require(!parts.empty(), "concat of zero tensors");
    const Shape& first = parts.front().shape();
    const Index rank = parts.front().rank();
    if (axis < 0) axis += rank;
    require(axis >= 0 && axis < rank, "concat axis out of range");
    Shape out_shape = first;
    out_shape[static_cast<std::size_t>(axis)] = 0;
    for (const Tensor& p : parts) {
        require(p.rank() == rank, "concat rank mismatch");
        for (Index a = 0; a < rank; ++a) {
            if (a != axis) {
                require(p.shape()[static_cast<std::size_t>(a)] == first[static_cast<std::size_t>(a)],
                        "concat shape mismatch: " + shape_string(p.shape()) + " vs " + shape_string(first));
            }
        }
        out_shape[static_cast<std::size_t>(axis)] += p.dim(axis);
    }
    Index outer = 1;
    for (Index a = 0; a < axis; ++a) outer *= first[static_cast<std::size_t>(a)];
    Index inner = 1;
    for (Index a = axis + 1; a < rank; ++a) inner *= first[static_cast<std::size_t>(a)];

    Tensor out(out_shape);
    const Index out_row = out_shape[static_cast<std::size_t>(axis)] * inner;
    Index col = 0;
    for (const Tensor& p : parts) {
        const Index row = p.dim(axis) * inner;
        for (Index o = 0; o < outer; ++o) {
            std::copy_n(p.data() + o * row, row, out.data() + o * out_row + col);
        }
        col += row;
    }
    return out;
}

std::vector<Tensor> split(const Tensor& whole, std::span<const Index> extents, Index axis) {
    const Index rank = whole.rank();
    if (axis < 0) axis += rank;
    require(axis >= 0 && axis < rank, "split axis out of range");
    Index total = 0;
    for (Index e : extents) total += e;
    require(total == whole.dim(axis), "split extents do not cover the axis");
    Index outer = 1;
    for (Index a = 0; a < axis; ++a) outer *= whole.dim(a);
    Index inner = 1;
    for (Index a = axis + 1; a < rank; ++a) inner *= whole.dim(a);
    const Index whole_row = whole.dim(axis) * inner;

    std::vector<Tensor> parts;
    Index col = 0;
    for (Index e : extents) {
        Shape s = whole.shape();
        s[static_cast<std::size_t>(axis)] = e;
        Tensor p(s);
        const Index row = e * inner;
        for (Index o = 0; o < outer; ++o) {
            std::copy_n(whole.data() + o * whole_row + col, row, p.data() + o * row);
        }
        col += row;
        parts.push_back(std::move(p));
    }
    return parts;
}

Tensor broadcast_mul(const Tensor& x, const Tensor& w) {
    require(x.rank() == w.rank(), "broadcast_mul rank mismatch");
    for (Index a = 0; a < x.rank(); ++a) {
        require(w.dim(a) == 1 || w.dim(a) == x.dim(a),
                "broadcast_mul incompatible shapes " + shape_string(x.shape()) + " and " + shape_string(w.shape()));
    }
    const std::vector<Index> off = broadcast_offsets(x.shape(), w.shape());
    Tensor y(x.shape());
    for (Index i = 0; i < x.size(); ++i) y[i] = x[i] * w[off[static_cast<std::size_t>(i)]];
    return y;
}

BroadcastGrads broadcast_mul_backward(const Tensor& x, const Tensor& w, const Tensor& grad_out) {
    check_same_shape(x, grad_out, "broadcast_mul backward");
    const std::vector<Index> off = broadcast_offsets(x.shape(), w.shape());
    BroadcastGrads g{Tensor(x.shape()), Tensor(w.shape())};
    std::vector<double> gw(static_cast<std::size_t>(w.size()), 0.0);
    for (Index i = 0; i < x.size(); ++i) {
        const Index o = off[static_cast<std::size_t>(i)];
        g.input[i] = grad_out[i] * w[o];
        gw[static_cast<std::size_t>(o)] += static_cast<double>(grad_out[i]) * x[i];
    }
    for (Index j = 0; j < w.size(); ++j) g.weight[j] = static_cast<float>(gw[static_cast<std::size_t>(j)]);
    return g;
}

Tensor add(const Tensor& x, const Tensor& y) {
    check_same_shape(x, y, "add");
    Tensor out(x.shape());
    for (Index i = 0; i < x.size(); ++i) out[i] = x[i] + y[i];
    return out;
}

Tensor sub(const Tensor& x, const Tensor& y) {
    check_same_shape(x, y, "sub");
    Tensor out(x.shape());
    for (Index i = 0; i < x.size(); ++i) out[i] = x[i] - y[i];
    return out;
}

Tensor scale(const Tensor& x, float factor) {
    Tensor out(x.shape());
    for (Index i = 0; i < x.size(); ++i) out[i] = x[i] * factor;
    return out;
}

double l1_loss(const Tensor& pred, const Tensor& target) {
    check_same_shape(pred, target, "l1_loss");
    double acc = 0.0;
    for (Index i = 0; i < pred.size(); ++i) acc += std::abs(static_cast<double>(pred[i]) - target[i]);
    return acc / static_cast<double>(pred.size());
}

Tensor l1_loss_backward(const Tensor& pred, const Tensor& target, double upstream) {
    check_same_shape(pred, target, "l1_loss backward");
    const auto unit = static_cast<float>(upstream / static_cast<double>(pred.size()));
    Tensor g(pred.shape());
    for (Index i = 0; i < pred.size(); ++i) {
        const float d = pred[i] - target[i];
        g[i] = d > 0.0f ? unit : (d < 0.0f ? -unit : 0.0f);
    }
    return g;
}

double sum(const Tensor& x) {
    double acc = 0.0;
    for (float v : x.values()) acc += v;
    return acc;
}

Tensor clip(const Tensor& x, float lo, float hi) {
    Tensor out(x.shape());
    for (Index i = 0; i < x.size(); ++i) out[i] = std::clamp(x[i], lo, hi);
    return out;
}

Tensor permute(const Tensor& x, std::span<const Index> perm) {
    const Index rank = x.rank();
    require(static_cast<Index>(perm.size()) == rank, "permute: permutation rank mismatch");
    Shape out_shape(static_cast<std::size_t>(rank));
    std::vector<bool> seen(static_cast<std::size_t>(rank), false);
    for (Index i = 0; i < rank; ++i) {
        const Index p = perm[static_cast<std::size_t>(i)];
        require(p >= 0 && p < rank && !seen[static_cast<std::size_t>(p)], "permute: invalid permutation");
        seen[static_cast<std::size_t>(p)] = true;
        out_shape[static_cast<std::size_t>(i)] = x.dim(p);
    }
    // Stride in the input for each output axis.
    const Shape in_strides = strides_of(x.shape());
    Shape src_strides(static_cast<std::size_t>(rank));
    for (Index i = 0; i < rank; ++i) {
        src_strides[static_cast<std::size_t>(i)] = in_strides[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])];
    }
    Tensor out(out_shape);
    std::vector<Index> counter(static_cast<std::size_t>(rank), 0);
    Index src = 0;
    for (Index i = 0; i < out.size(); ++i) {
        out[i] = x[src];
        for (Index a = rank - 1; a >= 0; --a) {
            const auto ua = static_cast<std::size_t>(a);
            ++counter[ua];
            src += src_strides[ua];
            if (counter[ua] < out_shape[ua]) break;
            src -= src_strides[ua] * counter[ua];
            counter[ua] = 0;
        }
    }
    return out;
}

} // namespace lfsr::ops
