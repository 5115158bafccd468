#pragma once

// Reference implementations written as plain loops, independent of the
// im2col/GEMM kernels they check.

#include "lfsr/autograd.hpp"
#include "lfsr/lightfield.hpp"
#include "lfsr/ops.hpp"
#include "lfsr/optim.hpp"
#include "lfsr/params.hpp"
#include "lfsr/tensor.hpp"
#include "reference.hpp"

#include <functional>
#include <string>
#include <vector>

namespace lfsr::testing {

Tensor random_tensor(const Shape& shape, Rng& rng, float lo = -1.0f, float hi = 1.0f);
/// Values in [lo, hi] whose magnitudes stay at least `margin` away from zero.
Tensor random_away_from_zero(const Shape& shape, Rng& rng, float margin, float hi = 1.0f);
LightField4D random_lightfield(Index h, Index w, Index ar, Index at, Index c, Rng& rng);

Tensor naive_conv3d(const Tensor& in, const Tensor& k, const Tensor& b);
Tensor naive_conv2d(const Tensor& in, const Tensor& k, const Tensor& b);
Tensor naive_pool(const Tensor& x, const std::vector<Index>& axes, ops::PoolMode mode);
Tensor naive_dense(const Tensor& x, const Tensor& w, const Tensor& b);
Tensor naive_concat(const std::vector<Tensor>& parts, Index axis);
Tensor naive_broadcast_mul(const Tensor& x, const Tensor& w);

/// max_i |a_i - b_i| / max(|b_i|, 1).
double max_rel_diff(const Tensor& a, const Tensor& b);

struct GradCheckStats {
    std::size_t coordinates = 0;
    double max_rel = 0.0;
    double median_rel = 0.0;
    /// Relative gap between the engine's loss and the reference loss at the probe point.
    double forward_rel = 0.0;
    std::string worst;
};

/// Reverse-mode gradients of `loss` (float engine) against central
/// differences of `reference` (double precision) for every entry of
/// `params`; inputs are passed as parameters too. At most `per_tensor`
/// random coordinates per tensor are probed.
///
/// Per-coordinate error is |g - n| / max(|g|, |n|, floor) with floor a
/// millionth of the tensor's largest gradient, the float32 resolution of
/// the analytic side.
GradCheckStats gradient_check(const ParamStore& params, const std::function<ag::Var(GradTape&)>& loss,
                              const std::function<double(const ref::DParams&)>& reference, Rng& rng,
                              double h = 1e-6, std::size_t per_tensor = 64);

} // namespace lfsr::testing
