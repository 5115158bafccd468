#pragma once

#include <json.hpp>

#include <optional>
#include <string>

namespace lfsr::cli {

/// Options shared by every subcommand.
struct Globals {
    std::string config_path;
    int threads = 0;
    bool deterministic = false;
    /// Parsed --config file, or an empty object.
    nlohmann::json config = nlohmann::json::object();
};

struct GenSyntheticArgs {
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<int> disparity;
    std::optional<long long> width, height, angular, channels;
    std::optional<double> smoothness;
    std::optional<int> bit_depth;
    std::string dense_out;
};

struct DegradeArgs {
    std::string in, out;
    std::optional<int> spatial_factor;
    bool angular_decimate = false;
    bool no_antialias = false;
};

struct SrArgs {
    std::string in, out;
    std::string mode, pssr, pasr;
    std::optional<int> factor;
    std::string evrn, nvs, external;
    bool zero_evrn = false;
    std::string report;
};

struct TrainArgs {
    std::string out, resume, weights_out, log;
    std::optional<int> epochs;
    std::optional<long long> max_steps;
};

struct EvalArgs {
    std::string pred, gt, protocol, out, csv, label;
};

struct InspectArgs {
    std::string path;
};

int cmd_gen_synthetic(const Globals& g, const GenSyntheticArgs& a);
int cmd_degrade(const Globals& g, const DegradeArgs& a);
int cmd_sr(const Globals& g, const SrArgs& a);
int cmd_train(const Globals& g, const TrainArgs& a);
int cmd_eval(const Globals& g, const EvalArgs& a);
int cmd_inspect(const Globals& g, const InspectArgs& a);

} // namespace lfsr::cli
