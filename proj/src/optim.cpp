#include "lfsr/optim.hpp"

#include "lfsr/error.hpp"

#include <cmath>

namespace lfsr {
namespace {

Moments& moments_for(AdamWState& state, const ParamEntry& entry) {
    auto [it, inserted] = state.moments.try_emplace(entry.name);
    if (inserted) {
        it->second.first.assign(static_cast<std::size_t>(entry.value.size()), 0.0);
        it->second.second.assign(static_cast<std::size_t>(entry.value.size()), 0.0);
    }
    require(static_cast<Index>(it->second.first.size()) == entry.value.size(),
            "optimizer moments for '" + entry.name + "' have the wrong size");
    return it->second;
}

const Tensor& grad_for(const GradMap& grads, const ParamEntry& entry) {
    const auto it = grads.find(entry.name);
    require(it != grads.end(), "missing gradient for '" + entry.name + "'");
    require(it->second.shape() == entry.value.shape(), "gradient shape mismatch for '" + entry.name + "'");
    return it->second;
}

} // namespace

double StepSchedule::at(int epoch) const {
    require(initial_lr > 0.0, "learning rate must be positive");
    if (halve_every <= 0) return initial_lr;
    return initial_lr * std::ldexp(1.0, -(epoch / halve_every));
}

void adamw_step(AdamWState& state, ParamStore& params, const GradMap& grads) {
    ++state.step;
    const double t = static_cast<double>(state.step);
    const double c1 = 1.0 - std::pow(state.beta1, t);
    const double c2 = 1.0 - std::pow(state.beta2, t);
    for (const ParamEntry& entry : params.entries()) {
        const Tensor& g = grad_for(grads, entry);
        Moments& mom = moments_for(state, entry);
        Tensor& theta = params.get(entry.name);
        const double decay = entry.weight_decay ? state.weight_decay : 0.0;
        for (Index i = 0; i < theta.size(); ++i) {
            const auto k = static_cast<std::size_t>(i);
            const double gi = g[i];
            mom.first[k] = state.beta1 * mom.first[k] + (1.0 - state.beta1) * gi;
            mom.second[k] = state.beta2 * mom.second[k] + (1.0 - state.beta2) * gi * gi;
            const double m_hat = mom.first[k] / c1;
            const double v_hat = mom.second[k] / c2;
            const double th = theta[i];
            theta[i] = static_cast<float>(th - state.lr * (m_hat / (std::sqrt(v_hat) + state.eps) + decay * th));
        }
    }
}

void adam_step(AdamWState& state, ParamStore& params, const GradMap& grads) {
    ++state.step;
    const double t = static_cast<double>(state.step);
    const double c1 = 1.0 - std::pow(state.beta1, t);
    const double c2 = 1.0 - std::pow(state.beta2, t);
    for (const ParamEntry& entry : params.entries()) {
        const Tensor& g = grad_for(grads, entry);
        Moments& mom = moments_for(state, entry);
        Tensor& theta = params.get(entry.name);
        const double l2 = entry.weight_decay ? state.weight_decay : 0.0;
        for (Index i = 0; i < theta.size(); ++i) {
            const auto k = static_cast<std::size_t>(i);
            const double gi = g[i] + l2 * theta[i];
            mom.first[k] = state.beta1 * mom.first[k] + (1.0 - state.beta1) * gi;
            mom.second[k] = state.beta2 * mom.second[k] + (1.0 - state.beta2) * gi * gi;
            const double m_hat = mom.first[k] / c1;
            const double v_hat = mom.second[k] / c2;
            theta[i] = static_cast<float>(theta[i] - state.lr * (m_hat / (std::sqrt(v_hat) + state.eps)));
        }
    }
}

double glorot_bound(const Shape& shape) {
    require(!shape.empty(), "glorot init needs a non-empty shape");
    double fan_in = 0.0;
    double fan_out = 0.0;
    if (shape.size() == 1) {
        fan_in = fan_out = static_cast<double>(shape[0]);
    } else {
        double receptive = 1.0;
        for (std::size_t i = 0; i + 2 < shape.size(); ++i) receptive *= static_cast<double>(shape[i]);
        fan_in = receptive * static_cast<double>(shape[shape.size() - 2]);
        fan_out = receptive * static_cast<double>(shape[shape.size() - 1]);
    }
    return std::sqrt(6.0 / (fan_in + fan_out));
}

Tensor glorot_uniform_init(const Shape& shape, Rng& rng) {
    const double bound = glorot_bound(shape);
    std::uniform_real_distribution<double> dist(-bound, bound);
    Tensor t(shape);
    for (float& v : t.values()) v = static_cast<float>(dist(rng));
    return t;
}

} // namespace lfsr
