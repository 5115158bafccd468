#include "lfsr/evrn.hpp"

#include "lfsr/error.hpp"
#include "lfsr/layers.hpp"
#include "lfsr/model_io.hpp"

#include <array>

namespace lfsr {
namespace {

std::string block_name(int i) { return "block" + std::to_string(i); }

ag::Var multi_path(GradTape& tape, const std::string& prefix, const ag::Var& dense_features, const EvrnConfig& cfg,
                   bool spatial) {
    ag::Var h = layers::conv3d_prelu(tape, prefix + ".fbn", dense_features);
    h = layers::conv3d_prelu(tape, prefix + ".sfe1", h);
    if (spatial && cfg.use_saw) h = ag::broadcast_mul(h, evrn::saw_weights(tape, prefix + ".saw", h));
    if (!spatial && cfg.use_aaw) h = ag::broadcast_mul(h, evrn::aaw_weights(tape, prefix + ".aaw", h));
    return layers::conv3d_prelu(tape, prefix + ".sfe2", h);
}

Tensor run(const EvrnWeights& weights, const std::function<ag::Var(GradTape&)>& fn) {
    GradTape tape(weights.params, false);
    return fn(tape).value();
}

} // namespace

void EvrnConfig::validate() const {
    require(residual_blocks >= 1, "EVRN needs at least one residual block");
    require(channels >= 1 && reduction >= 1, "EVRN channels and reduction must be positive");
    require(channels % reduction == 0, "EVRN channels (" + std::to_string(channels) +
                                           ") must be divisible by the reduction ratio (" + std::to_string(reduction) + ")");
    require(angular >= 1, "EVRN angular extent must be positive");
}

nlohmann::json EvrnConfig::to_json() const {
    return {{"residual_blocks", residual_blocks}, {"channels", channels}, {"reduction", reduction},
            {"angular", angular},                 {"use_caw", use_caw},   {"use_saw", use_saw},
            {"use_aaw", use_aaw},                 {"caw_mid_activation", caw_mid_activation}};
}

EvrnConfig EvrnConfig::from_json(const nlohmann::json& j) {
    EvrnConfig c;
    c.residual_blocks = j.value("residual_blocks", c.residual_blocks);
    c.channels = j.value("channels", c.channels);
    c.reduction = j.value("reduction", c.reduction);
    c.angular = j.value("angular", c.angular);
    c.use_caw = j.value("use_caw", c.use_caw);
    c.use_saw = j.value("use_saw", c.use_saw);
    c.use_aaw = j.value("use_aaw", c.use_aaw);
    c.caw_mid_activation = j.value("caw_mid_activation", c.caw_mid_activation);
    c.validate();
    return c;
}

EvrnWeights EvrnWeights::initialize(const EvrnConfig& cfg, Rng& rng) {
    cfg.validate();
    const Index C = cfg.channels, R = cfg.residual_blocks, A = cfg.angular;
    EvrnWeights w{cfg, {}};
    ParamStore& p = w.params;
    layers::add_layer(p, "sfe0", {3, 3, 3, 1, C}, rng, true);
    for (int i = 1; i <= R; ++i) {
        const std::string b = block_name(i);
        layers::add_layer(p, b + ".fbn", {1, 1, 1, i * C, C}, rng, true);
        layers::add_layer(p, b + ".conv1", {3, 3, 3, C, C}, rng, true);
        layers::add_layer(p, b + ".conv2", {3, 3, 3, C, C}, rng, false);
        if (cfg.use_caw) {
            layers::add_layer(p, b + ".caw.down", {C, C / cfg.reduction}, rng, false);
            layers::add_layer(p, b + ".caw.up", {C / cfg.reduction, C}, rng, false);
        }
    }
    for (const char* path : {"path_s", "path_a"}) {
        const std::string ps = path;
        layers::add_layer(p, ps + ".fbn", {1, 1, 1, (R + 1) * C, C}, rng, true);
        layers::add_layer(p, ps + ".sfe1", {3, 3, 3, C, C}, rng, true);
        if (ps == "path_s" && cfg.use_saw) layers::add_layer(p, ps + ".saw", {5, 5, 2, 1}, rng, false);
        if (ps == "path_a" && cfg.use_aaw) layers::add_layer(p, ps + ".aaw", {2 * A, A}, rng, false);
        layers::add_layer(p, ps + ".sfe2", {3, 3, 3, C, C}, rng, true);
    }
    layers::add_layer(p, "tail", {3, 3, 3, 2 * C, 1}, rng, false);
    return w;
}

EvrnWeights EvrnWeights::zeros(const EvrnConfig& cfg) {
    Rng rng(0);
    EvrnWeights w = initialize(cfg, rng);
    w.params.zero();
    return w;
}

void EvrnWeights::save(const std::filesystem::path& path) const {
    save_model(path, StoredModel{"evrn", config.to_json(), params});
}

EvrnWeights EvrnWeights::load(const std::filesystem::path& path) {
    StoredModel m = load_model(path);
    if (m.model != "evrn") throw ContractError(path.string() + " does not hold EVRN weights");
    EvrnWeights w{EvrnConfig::from_json(m.config), std::move(m.params)};
    check_same_layout(zeros(w.config).params, w.params, "EVRN weights " + path.string());
    return w;
}

namespace evrn {

ag::Var caw_weights(GradTape& tape, const std::string& prefix, const ag::Var& features, const EvrnConfig& cfg) {
    const Index C = features.shape()[3];
    ag::Var v = ag::reshape(ag::pool(features, {0, 1, 2}, ops::PoolMode::Avg), {C});
    v = layers::dense(tape, prefix + ".down", v);
    if (cfg.caw_mid_activation) v = ag::relu(v);
    v = ag::sigmoid(layers::dense(tape, prefix + ".up", v));
    return ag::reshape(v, {1, 1, 1, C});
}

ag::Var car_block(GradTape& tape, const std::string& prefix, const ag::Var& features, const EvrnConfig& cfg) {
    ag::Var r = layers::conv3d_prelu(tape, prefix + ".conv1", features);
    r = layers::conv3d(tape, prefix + ".conv2", r);
    if (cfg.use_caw) r = ag::broadcast_mul(r, caw_weights(tape, prefix + ".caw", r, cfg));
    return ag::add(features, r);
}

ag::Var saw_weights(GradTape& tape, const std::string& prefix, const ag::Var& features) {
    const Index s1 = features.shape()[0], s2 = features.shape()[2];
    const std::array<ag::Var, 2> pooled{ag::pool(features, {1, 3}, ops::PoolMode::Avg),
                                        ag::pool(features, {1, 3}, ops::PoolMode::Max)};
    ag::Var map = ag::reshape(ag::concat(pooled, 3), {s1, s2, 2});
    ag::Var w = ag::sigmoid(layers::conv2d(tape, prefix, map));
    return ag::reshape(w, {s1, 1, s2, 1});
}

ag::Var aaw_weights(GradTape& tape, const std::string& prefix, const ag::Var& features) {
    const Index A = features.shape()[1];
    const Tensor& kernel = tape.params().get(prefix + ".w");
    require(kernel.dim(1) == A, "AAW was built for angular extent " + std::to_string(kernel.dim(1)) +
                                    ", input has " + std::to_string(A));
    const std::array<ag::Var, 2> pooled{ag::reshape(ag::pool(features, {0, 2, 3}, ops::PoolMode::Avg), {A}),
                                        ag::reshape(ag::pool(features, {0, 2, 3}, ops::PoolMode::Max), {A})};
    ag::Var w = ag::sigmoid(layers::dense(tape, prefix, ag::concat(pooled, 0)));
    return ag::reshape(w, {1, A, 1, 1});
}

ag::Var graph(GradTape& tape, const ag::Var& input, const EvrnConfig& cfg) {
    require(input.shape().size() == 4 && input.shape()[3] == 1, "EVRN input must be (s1, a, s2, 1)");
    std::vector<ag::Var> features{layers::conv3d_prelu(tape, "sfe0", input)};
    for (int i = 1; i <= cfg.residual_blocks; ++i) {
        const std::string b = block_name(i);
        const ag::Var stacked = features.size() == 1 ? features.front() : ag::concat(features, 3);
        features.push_back(car_block(tape, b, layers::conv3d_prelu(tape, b + ".fbn", stacked), cfg));
    }
    const ag::Var dense_features = ag::concat(features, 3);
    const std::array<ag::Var, 2> paths{multi_path(tape, "path_s", dense_features, cfg, true),
                                       multi_path(tape, "path_a", dense_features, cfg, false)};
    const ag::Var residual = layers::conv3d(tape, "tail", ag::concat(paths, 3));
    return ag::add(input, residual);
}

} // namespace evrn

EPIVolume evrn_forward(const EPIVolume& volume, const EvrnWeights& weights) {
    const Tensor out = run(weights, [&](GradTape& tape) {
        return evrn::graph(tape, ag::constant(volume.as_feature_map()), weights.config);
    });
    return EPIVolume(out.reshaped(volume.data().shape()), volume.orientation(), volume.fixed_index());
}

Tensor caw_weights(const Tensor& features, const EvrnWeights& weights, int block) {
    return run(weights, [&](GradTape& tape) {
        return evrn::caw_weights(tape, block_name(block) + ".caw", ag::constant(features), weights.config);
    });
}

Tensor saw_weights(const Tensor& features, const EvrnWeights& weights) {
    return run(weights, [&](GradTape& tape) { return evrn::saw_weights(tape, "path_s.saw", ag::constant(features)); });
}

Tensor aaw_weights(const Tensor& features, const EvrnWeights& weights) {
    return run(weights, [&](GradTape& tape) { return evrn::aaw_weights(tape, "path_a.aaw", ag::constant(features)); });
}

Tensor car_block(const Tensor& features, const EvrnWeights& weights, int block) {
    return run(weights, [&](GradTape& tape) {
        return evrn::car_block(tape, block_name(block), ag::constant(features), weights.config);
    });
}

} // namespace lfsr
