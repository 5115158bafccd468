#include "lfsr/layers.hpp"

namespace lfsr::layers {

void add_layer(ParamStore& params, const std::string& name, const Shape& kernel, Rng& rng, bool with_prelu) {
    const Index out_channels = kernel.back();
    params.add(name + ".w", glorot_uniform_init(kernel, rng), true);
    params.add(name + ".b", Tensor(Shape{out_channels}), false);
    if (with_prelu) params.add(name + ".a", Tensor(Shape{out_channels}), false);
}

ag::Var conv3d(GradTape& tape, const std::string& name, const ag::Var& x) {
    return ag::conv3d(x, tape.param(name + ".w"), tape.param(name + ".b"));
}

ag::Var conv3d_prelu(GradTape& tape, const std::string& name, const ag::Var& x) {
    return ag::prelu(conv3d(tape, name, x), tape.param(name + ".a"));
}

ag::Var conv2d(GradTape& tape, const std::string& name, const ag::Var& x) {
    return ag::conv2d(x, tape.param(name + ".w"), tape.param(name + ".b"));
}

ag::Var conv2d_prelu(GradTape& tape, const std::string& name, const ag::Var& x) {
    return ag::prelu(conv2d(tape, name, x), tape.param(name + ".a"));
}

ag::Var dense(GradTape& tape, const std::string& name, const ag::Var& x) {
    return ag::dense(x, tape.param(name + ".w"), tape.param(name + ".b"));
}

} // namespace lfsr::layers
