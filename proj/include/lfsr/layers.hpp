#pragma once

#include "lfsr/autograd.hpp"
#include "lfsr/optim.hpp"
#include "lfsr/params.hpp"

#include <string>

/// Parameter-naming helpers shared by the networks. A layer `name` owns
/// `name.w` (kernel), `name.b` (bias) and, with an activation, `name.a`
/// (per-channel PReLU slope). Kernels get Glorot-uniform values; biases and
/// slopes start at zero and are excluded from weight decay.
namespace lfsr::layers {

void add_layer(ParamStore& params, const std::string& name, const Shape& kernel, Rng& rng, bool with_prelu);

ag::Var conv3d(GradTape& tape, const std::string& name, const ag::Var& x);
ag::Var conv3d_prelu(GradTape& tape, const std::string& name, const ag::Var& x);
ag::Var conv2d(GradTape& tape, const std::string& name, const ag::Var& x);
ag::Var conv2d_prelu(GradTape& tape, const std::string& name, const ag::Var& x);
ag::Var dense(GradTape& tape, const std::string& name, const ag::Var& x);

} // namespace lfsr::layers
