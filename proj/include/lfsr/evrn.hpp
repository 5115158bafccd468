#pragma once

#include "lfsr/autograd.hpp"
#include "lfsr/lightfield.hpp"
#include "lfsr/optim.hpp"
#include "lfsr/params.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>

namespace lfsr {

/// EPI volume refinement network configuration.
struct EvrnConfig {
    int residual_blocks = 7;
    int channels = 64;
    int reduction = 16;
    /// Angular extent of the volumes fed to the network (the AAW dense layer is 2A -> A).
    int angular = 9;
    bool use_caw = true;
    bool use_saw = true;
    bool use_aaw = true;
    bool caw_mid_activation = true;

    void validate() const;
    nlohmann::json to_json() const;
    static EvrnConfig from_json(const nlohmann::json& j);

    friend bool operator==(const EvrnConfig&, const EvrnConfig&) = default;
};

/// Configuration plus the parameter tensors of one network instance.
struct EvrnWeights {
    EvrnConfig config;
    ParamStore params;

    /// Glorot-uniform kernels; biases and PReLU slopes zero.
    static EvrnWeights initialize(const EvrnConfig& config, Rng& rng);
    /// Every tensor zero: the network reduces to its global skip.
    static EvrnWeights zeros(const EvrnConfig& config);

    void save(const std::filesystem::path& path) const;
    /// Loads and validates the layout against the stored config.
    static EvrnWeights load(const std::filesystem::path& path);
};

namespace evrn {

/// Channel attention: global average pool, C -> C/r -> C dense maps, sigmoid. Returns (1, 1, 1, C).
ag::Var caw_weights(GradTape& tape, const std::string& prefix, const ag::Var& features, const EvrnConfig& cfg);
/// conv-prelu-conv, optionally scaled by CAW, plus the local skip.
ag::Var car_block(GradTape& tape, const std::string& prefix, const ag::Var& features, const EvrnConfig& cfg);
/// Spatial attention over (a, c)-pooled maps with a 5x5 conv. Returns (s1, 1, s2, 1).
ag::Var saw_weights(GradTape& tape, const std::string& prefix, const ag::Var& features);
/// Angular attention over (s1, s2, c)-pooled vectors with a 2A -> A dense map. Returns (1, A, 1, 1).
ag::Var aaw_weights(GradTape& tape, const std::string& prefix, const ag::Var& features);

/// Full network on an (s1, a, s2, 1) input; returns input + predicted residual.
ag::Var graph(GradTape& tape, const ag::Var& input, const EvrnConfig& cfg);

} // namespace evrn

EPIVolume evrn_forward(const EPIVolume& volume, const EvrnWeights& weights);

/// Plain-tensor wrappers used for inspection and testing.
Tensor caw_weights(const Tensor& features, const EvrnWeights& weights, int block);
Tensor saw_weights(const Tensor& features, const EvrnWeights& weights);
Tensor aaw_weights(const Tensor& features, const EvrnWeights& weights);
Tensor car_block(const Tensor& features, const EvrnWeights& weights, int block);

} // namespace lfsr
