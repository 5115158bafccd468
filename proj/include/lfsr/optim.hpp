#pragma once

#include "lfsr/params.hpp"
#include "lfsr/tensor.hpp"

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

namespace lfsr {

using Rng = std::mt19937_64;

/// Step-decay learning rate: halves every `halve_every` epochs (0-based epochs).
struct StepSchedule {
    double initial_lr = 2e-4;
    int halve_every = 10;

    double at(int epoch) const;
};

struct Moments {
    std::vector<double> first;
    std::vector<double> second;
};

/// Adam-family optimizer state. Moments are kept in double precision.
struct AdamWState {
    double lr = 2e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.0;
    std::int64_t step = 0;
    std::map<std::string, Moments> moments;
};

/// Decoupled weight decay: theta -= lr * (m_hat / (sqrt(v_hat) + eps) + lambda * theta).
/// Entries whose weight_decay flag is false skip the decay term.
void adamw_step(AdamWState& state, ParamStore& params, const GradMap& grads);

/// Classic Adam with the decay folded into the gradient (L2 penalty).
void adam_step(AdamWState& state, ParamStore& params, const GradMap& grads);

/// Glorot/Xavier uniform samples for a kernel of shape (..., fan_in_ch, fan_out_ch).
/// The receptive field is the product of the leading extents.
Tensor glorot_uniform_init(const Shape& shape, Rng& rng);
double glorot_bound(const Shape& shape);

} // namespace lfsr
