#pragma once

#include "lfsr/tensor.hpp"

#include <span>
#include <vector>

/// Forward and vector-Jacobian kernels on plain tensors.
///
/// Convolutions use zero padding of (k-1)/2 per axis and the
/// cross-correlation convention (no kernel flip).
namespace lfsr::ops {

struct ConvGrads {
    Tensor input;
    Tensor kernel;
    Tensor bias;
};

/// input (s1, a, s2, Cin), kernel (k1, k2, k3, Cin, Cout), bias (Cout).
Tensor conv3d_same(const Tensor& input, const Tensor& kernel, const Tensor& bias);
ConvGrads conv3d_same_backward(const Tensor& input, const Tensor& kernel, const Tensor& grad_out,
                               bool need_input_grad = true);

/// input (h, w, Cin), kernel (kh, kw, Cin, Cout), bias (Cout).
Tensor conv2d_same(const Tensor& input, const Tensor& kernel, const Tensor& bias);
ConvGrads conv2d_same_backward(const Tensor& input, const Tensor& kernel, const Tensor& grad_out,
                               bool need_input_grad = true);

struct PreluGrads {
    Tensor input;
    Tensor slope;
};

/// Per-channel PReLU; the slope has one entry per last-axis channel.
Tensor prelu(const Tensor& x, const Tensor& slope);
PreluGrads prelu_backward(const Tensor& x, const Tensor& slope, const Tensor& grad_out);

Tensor sigmoid(const Tensor& x);
/// Takes the forward output, not the input.
Tensor sigmoid_backward(const Tensor& y, const Tensor& grad_out);

Tensor relu(const Tensor& x);
Tensor relu_backward(const Tensor& x, const Tensor& grad_out);

enum class PoolMode { Avg, Max };

/// Reduces the listed axes to extent 1.
Tensor pool_over_axes(const Tensor& x, std::span<const Index> axes, PoolMode mode);
Tensor pool_over_axes_backward(const Tensor& x, std::span<const Index> axes, PoolMode mode,
                               const Tensor& grad_out);

struct DenseGrads {
    Tensor input;
    Tensor weight;
    Tensor bias;
};

/// y = W^T x + b with x (n), W (n, m), b (m).
Tensor dense(const Tensor& x, const Tensor& weight, const Tensor& bias);
DenseGrads dense_backward(const Tensor& x, const Tensor& weight, const Tensor& grad_out);

Tensor concat(std::span<const Tensor> parts, Index axis);
/// Inverse of concat: cuts `whole` along `axis` into pieces of the given extents.
std::vector<Tensor> split(const Tensor& whole, std::span<const Index> extents, Index axis);

struct BroadcastGrads {
    Tensor input;
    Tensor weight;
};

/// Elementwise x * w where each axis of w has extent 1 or equal to x's.
Tensor broadcast_mul(const Tensor& x, const Tensor& w);
BroadcastGrads broadcast_mul_backward(const Tensor& x, const Tensor& w, const Tensor& grad_out);

Tensor add(const Tensor& x, const Tensor& y);
Tensor sub(const Tensor& x, const Tensor& y);
Tensor scale(const Tensor& x, float factor);

/// Mean absolute difference, accumulated in double.
double l1_loss(const Tensor& pred, const Tensor& target);
/// Gradient of upstream * l1_loss with respect to pred.
Tensor l1_loss_backward(const Tensor& pred, const Tensor& target, double upstream = 1.0);

/// Sum of all values, accumulated in double.
double sum(const Tensor& x);

Tensor clip(const Tensor& x, float lo, float hi);

/// Axis permutation: result axis i is input axis perm[i].
Tensor permute(const Tensor& x, std::span<const Index> perm);

} // namespace lfsr::ops
