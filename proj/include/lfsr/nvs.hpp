#pragma once

#include "lfsr/autograd.hpp"
#include "lfsr/lightfield.hpp"
#include "lfsr/optim.hpp"
#include "lfsr/params.hpp"

#include <json.hpp>

#include <filesystem>

namespace lfsr {

struct NvsConfig {
    int residual_blocks = 7;
    int channels = 64;

    void validate() const;
    nlohmann::json to_json() const;
    static NvsConfig from_json(const nlohmann::json& j);

    friend bool operator==(const NvsConfig&, const NvsConfig&) = default;
};

struct NvsWeights {
    NvsConfig config;
    ParamStore params;

    static NvsWeights initialize(const NvsConfig& config, Rng& rng);
    static NvsWeights zeros(const NvsConfig& config);

    void save(const std::filesystem::path& path) const;
    static NvsWeights load(const std::filesystem::path& path);
};

/// Elementwise average of two views.
Tensor nvs_mean(const Tensor& a, const Tensor& b);

namespace nvs {
/// Two (h, w) views stacked to (h, w, 2) in, (h, w, 1) novel view out.
ag::Var graph(GradTape& tape, const ag::Var& stacked, const NvsConfig& cfg);
/// Stacks two (h, w) images into an (h, w, 2) input.
Tensor stack_pair(const Tensor& a, const Tensor& b);
} // namespace nvs

/// Synthesizes the view between a and b; both are (h, w) images.
Tensor nvs_cnn_forward(const Tensor& a, const Tensor& b, const NvsWeights& weights);

enum class PasrMethod { Mean, Cnn };

/// Inserts one synthesized slice between each consecutive pair: A -> 2A - 1.
/// Input slices land unchanged at even output indices.
EPIVolume pasr_volume(const EPIVolume& volume, PasrMethod method, const NvsWeights* weights = nullptr);

} // namespace lfsr
