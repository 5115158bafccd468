#include "lfsr/nvs.hpp"

#include "lfsr/error.hpp"
#include "lfsr/layers.hpp"
#include "lfsr/model_io.hpp"

namespace lfsr {

void NvsConfig::validate() const {
    require(residual_blocks >= 1, "NVS needs at least one residual block");
    require(channels >= 1, "NVS channels must be positive");
}

nlohmann::json NvsConfig::to_json() const { return {{"residual_blocks", residual_blocks}, {"channels", channels}}; }

NvsConfig NvsConfig::from_json(const nlohmann::json& j) {
    NvsConfig c;
    c.residual_blocks = j.value("residual_blocks", c.residual_blocks);
    c.channels = j.value("channels", c.channels);
    c.validate();
    return c;
}

NvsWeights NvsWeights::initialize(const NvsConfig& cfg, Rng& rng) {
    cfg.validate();
    const Index C = cfg.channels;
    NvsWeights w{cfg, {}};
    layers::add_layer(w.params, "sfe", {3, 3, 2, C}, rng, true);
    for (int i = 1; i <= cfg.residual_blocks; ++i) {
        const std::string b = "block" + std::to_string(i);
        layers::add_layer(w.params, b + ".bottleneck", {1, 1, C, C}, rng, true);
        layers::add_layer(w.params, b + ".conv1", {3, 3, C, C}, rng, true);
        layers::add_layer(w.params, b + ".conv2", {3, 3, C, C}, rng, false);
    }
    layers::add_layer(w.params, "tail", {3, 3, C, 1}, rng, false);
    return w;
}

NvsWeights NvsWeights::zeros(const NvsConfig& cfg) {
    Rng rng(0);
    NvsWeights w = initialize(cfg, rng);
    w.params.zero();
    return w;
}

void NvsWeights::save(const std::filesystem::path& path) const {
    save_model(path, StoredModel{"nvs", config.to_json(), params});
}

NvsWeights NvsWeights::load(const std::filesystem::path& path) {
    StoredModel m = load_model(path);
    if (m.model != "nvs") throw ContractError(path.string() + " does not hold NVS weights");
    NvsWeights w{NvsConfig::from_json(m.config), std::move(m.params)};
    check_same_layout(zeros(w.config).params, w.params, "NVS weights " + path.string());
    return w;
}

Tensor nvs_mean(const Tensor& a, const Tensor& b) {
    require(a.shape() == b.shape(), "nvs_mean: view shapes differ");
    Tensor out(a.shape());
    for (Index i = 0; i < a.size(); ++i) out[i] = (a[i] + b[i]) * 0.5f;
    return out;
}

namespace nvs {

Tensor stack_pair(const Tensor& a, const Tensor& b) {
    require(a.rank() == 2 && a.shape() == b.shape(), "NVS inputs must be two (h, w) images of one shape");
    Tensor x(Shape{a.dim(0), a.dim(1), 2});
    for (Index i = 0; i < a.size(); ++i) {
        x[2 * i] = a[i];
        x[2 * i + 1] = b[i];
    }
    return x;
}

ag::Var graph(GradTape& tape, const ag::Var& stacked, const NvsConfig& cfg) {
    const ag::Var f0 = layers::conv2d_prelu(tape, "sfe", stacked);
    ag::Var h = f0;
    for (int i = 1; i <= cfg.residual_blocks; ++i) {
        const std::string b = "block" + std::to_string(i);
        ag::Var r = layers::conv2d_prelu(tape, b + ".bottleneck", h);
        r = layers::conv2d_prelu(tape, b + ".conv1", r);
        r = layers::conv2d(tape, b + ".conv2", r);
        h = ag::add(h, r);
    }
    return layers::conv2d(tape, "tail", ag::add(h, f0));
}

} // namespace nvs

Tensor nvs_cnn_forward(const Tensor& a, const Tensor& b, const NvsWeights& weights) {
    GradTape tape(weights.params, false);
    const ag::Var out = nvs::graph(tape, ag::constant(nvs::stack_pair(a, b)), weights.config);
    return out.value().reshaped(a.shape());
}

EPIVolume pasr_volume(const EPIVolume& volume, PasrMethod method, const NvsWeights* weights) {
    const Index A = volume.angular();
    require(A >= 2, "PASR needs at least two angular slices");
    require(method == PasrMethod::Mean || weights != nullptr, "nvs-cnn PASR requires weights");
    std::vector<Tensor> slices;
    slices.reserve(static_cast<std::size_t>(2 * A - 1));
    Tensor prev = volume.a_slice(0);
    slices.push_back(prev);
    for (Index a = 1; a < A; ++a) {
        Tensor next = volume.a_slice(a);
        slices.push_back(method == PasrMethod::Mean ? nvs_mean(prev, next) : nvs_cnn_forward(prev, next, *weights));
        slices.push_back(next);
        prev = std::move(next);
    }
    return EPIVolume::from_a_slices(slices, volume.orientation(), volume.fixed_index());
}

} // namespace lfsr
