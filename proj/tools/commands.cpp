#include "commands.hpp"

#include "lfsr/container.hpp"
#include "lfsr/error.hpp"
#include "lfsr/evrn.hpp"
#include "lfsr/lf_io.hpp"
#include "lfsr/metrics.hpp"
#include "lfsr/model_io.hpp"
#include "lfsr/nvs.hpp"
#include "lfsr/parallel.hpp"
#include "lfsr/pipeline.hpp"
#include "lfsr/resample.hpp"
#include "lfsr/synthetic.hpp"
#include "lfsr/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>

namespace fs = std::filesystem;
using nlohmann::json;

namespace lfsr::cli {
namespace {

const json& section(const Globals& g, const char* name) {
    static const json empty = json::object();
    return g.config.contains(name) ? g.config.at(name) : empty;
}

template <class T>
T pick(const std::optional<T>& flag, const json& cfg, const char* key, T fallback) {
    if (flag) return *flag;
    return cfg.value(key, fallback);
}

std::string pick(const std::string& flag, const json& cfg, const char* key, const std::string& fallback) {
    if (!flag.empty()) return flag;
    return cfg.value(key, fallback);
}

void write_json(const fs::path& path, const json& j) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

json echo(const Globals& g, const std::string& command) {
    return {{"command", command},
            {"config_file", g.config_path},
            {"config", g.config},
            {"threads", thread_count()},
            {"deterministic", g.deterministic}};
}

json spec_json(const SyntheticSpec& s) {
    return {{"seed", s.seed},         {"disparity", s.disparity}, {"width", s.width},
            {"height", s.height},     {"angular", s.angular},     {"channels", s.channels},
            {"smoothness", s.smoothness}};
}

ColorSpace channels_to_space(Index c) { return c == 1 ? ColorSpace::Y : ColorSpace::RGB; }

PasrMethod pasr_from(const std::string& s) {
    if (s == "mean") return PasrMethod::Mean;
    if (s == "cnn") return PasrMethod::Cnn;
    throw ContractError("unknown PASR method '" + s + "' (expected mean or cnn)");
}

PssrMethod pssr_from(const std::string& s) {
    if (s == "bicubic") return PssrMethod::Bicubic;
    if (s == "external") return PssrMethod::External;
    throw ContractError("unknown PSSR method '" + s + "' (expected bicubic or external)");
}

// Refuses weights whose config hash differs from the one the run config expects.
void check_expected_config(const json& expected, const nlohmann::json& actual, const std::string& what) {
    if (expected.is_null()) return;
    const std::string want = config_hash(expected), have = config_hash(actual);
    if (want != have) {
        throw ContractError(what + " config hash " + have + " does not match the run config (" + want +
                            "); expected " + expected.dump() + ", weights carry " + actual.dump());
    }
}

} // namespace

// ---------------------------------------------------------------- gen-synthetic

int cmd_gen_synthetic(const Globals& g, const GenSyntheticArgs& a) {
    const json& cfg = section(g, "synthetic");
    SyntheticSpec spec;
    spec.seed = pick(a.seed, cfg, "seed", g.config.value("seed", spec.seed));
    spec.disparity = pick(a.disparity, cfg, "disparity", spec.disparity);
    spec.width = pick<long long>(a.width, cfg, "width", spec.width);
    spec.height = pick<long long>(a.height, cfg, "height", spec.height);
    spec.angular = pick<long long>(a.angular, cfg, "angular", spec.angular);
    spec.channels = pick<long long>(a.channels, cfg, "channels", spec.channels);
    spec.smoothness = pick(a.smoothness, cfg, "smoothness", spec.smoothness);
    const int bit_depth = pick(a.bit_depth, cfg, "bit_depth", 8);
    const std::string out = pick(a.out, cfg, "out", "");
    require(!out.empty(), "gen-synthetic needs --out");

    const SyntheticScene scene(spec);
    const json extra = {{"generator", spec_json(spec)}, {"run", echo(g, "gen-synthetic")}};
    save_lightfield(out, scene.light_field(), bit_depth, extra);
    std::cout << "wrote " << spec.angular << "x" << spec.angular << " views of " << spec.height << "x" << spec.width
              << " to " << out << '\n';

    if (!a.dense_out.empty()) {
        require(spec.disparity % 2 == 0, "half-step ground truth needs an even disparity");
        const Index dense = 2 * spec.angular - 1;
        std::vector<Tensor> views;
        for (Index r = 0; r < dense; ++r)
            for (Index t = 0; t < dense; ++t) views.push_back(scene.render_view(0.5 * r, 0.5 * t));
        json dense_extra = extra;
        dense_extra["half_step"] = true;
        save_lightfield(a.dense_out, assemble_from_sais(views, dense, dense, channels_to_space(spec.channels)), bit_depth,
                        dense_extra);
        std::cout << "wrote " << dense << "x" << dense << " half-step views to " << a.dense_out << '\n';
    }
    return 0;
}

// ---------------------------------------------------------------- degrade

int cmd_degrade(const Globals& g, const DegradeArgs& a) {
    const json& cfg = section(g, "degrade");
    DegradeSpec spec;
    spec.spatial_factor = pick(a.spatial_factor, cfg, "spatial_factor", spec.spatial_factor);
    spec.angular_decimate = a.angular_decimate || cfg.value("angular_decimate", false);
    spec.antialias = !a.no_antialias && cfg.value("antialias", true);
    const std::string in = pick(a.in, cfg, "in", ""), out = pick(a.out, cfg, "out", "");
    require(!in.empty() && !out.empty(), "degrade needs --in and --out");

    const LoadedLightField src = load_lightfield(in);
    json history = src.manifest.extra.value("degradations", json::array());
    if (!history.empty()) {
        std::cerr << "warning: " << in << " was already degraded " << history.size()
                  << " time(s) (last: " << history.back().dump() << "); degrading again\n";
    }
    const LightField4D low = degrade(src.lf, spec);
    history.push_back({{"spatial_factor", spec.spatial_factor},
                       {"angular_decimate", spec.angular_decimate},
                       {"antialias", spec.antialias},
                       {"source", in}});
    json extra = src.manifest.extra;
    extra["degradations"] = history;
    extra["run"] = echo(g, "degrade");
    save_lightfield(out, low, src.manifest.bit_depth, extra);
    std::cout << "degraded " << src.lf.height() << "x" << src.lf.width() << " (" << src.lf.angular_rho() << "x"
              << src.lf.angular_tau() << ") -> " << low.height() << "x" << low.width() << " (" << low.angular_rho()
              << "x" << low.angular_tau() << ")\n";
    return 0;
}

// ---------------------------------------------------------------- sr

int cmd_sr(const Globals& g, const SrArgs& a) {
    const json& cfg = section(g, "sr");
    const std::string in = pick(a.in, cfg, "in", ""), out = pick(a.out, cfg, "out", "");
    require(!in.empty() && !out.empty(), "sr needs --in and --out");

    SrTask task;
    task.mode = sr_mode_from_string(pick(a.mode, cfg, "mode", "ssr"));
    task.angular = task.mode != SrMode::SSR;
    task.spatial_factor = pick(a.factor, cfg, "spatial_factor", task.mode == SrMode::ASR ? 1 : 2);
    task.pssr = pssr_from(pick(a.pssr, cfg, "pssr", "bicubic"));
    task.pasr = pasr_from(pick(a.pasr, cfg, "pasr", "mean"));

    const LoadedLightField src = load_lightfield(in);
    const Index target_angular = task.angular ? 2 * src.lf.angular_rho() - 1 : src.lf.angular_rho();

    json weights_info = json::object();
    std::optional<EvrnWeights> evrn;
    const std::string evrn_path = pick(a.evrn, cfg, "evrn", "");
    if (a.zero_evrn) {
        // The output is the stage-1 result whatever the size; without a config use the desk-scale network.
        EvrnConfig c = cfg.contains("evrn_config") ? EvrnConfig::from_json(cfg.at("evrn_config"))
                       : evrn_path.empty()         ? EvrnConfig::from_json({{"residual_blocks", 2}, {"channels", 16}, {"reduction", 4}})
                                                   : EvrnWeights::load(evrn_path).config;
        c.angular = static_cast<int>(target_angular);
        evrn = EvrnWeights::zeros(c);
        weights_info["evrn"] = {{"zero", true}, {"config", c.to_json()}};
    } else if (!evrn_path.empty()) {
        evrn = EvrnWeights::load(evrn_path);
        const json want = cfg.contains("evrn_config") ? EvrnConfig::from_json(cfg.at("evrn_config")).to_json() : json();
        check_expected_config(want, evrn->config.to_json(), "EVRN weights " + evrn_path);
        weights_info["evrn"] = {{"path", evrn_path}, {"config_hash", config_hash(evrn->config.to_json())}};
    }
    std::optional<NvsWeights> nvs;
    const std::string nvs_path = pick(a.nvs, cfg, "nvs", "");
    if (!nvs_path.empty()) {
        nvs = NvsWeights::load(nvs_path);
        const json want = cfg.contains("nvs_config") ? NvsConfig::from_json(cfg.at("nvs_config")).to_json() : json();
        check_expected_config(want, nvs->config.to_json(), "NVS weights " + nvs_path);
        weights_info["nvs"] = {{"path", nvs_path}, {"config_hash", config_hash(nvs->config.to_json())}};
    }
    task.evrn = evrn ? &*evrn : nullptr;
    task.nvs = nvs ? &*nvs : nullptr;

    std::optional<LightField4D> external;
    const std::string external_path = pick(a.external, cfg, "external", "");
    if (task.pssr == PssrMethod::External) {
        require(!external_path.empty(), "PSSR external needs --external");
        external = load_lightfield(external_path).lf;
        task.external_spatial = &*external;
    }
    task.validate();

    json events = json::array();
    const auto t0 = std::chrono::steady_clock::now();
    const LightField4D result = super_resolve(src.lf, task, [&](const json& e) { events.push_back(e); });
    const double total_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();

    json extra = {{"sr", task.to_json()}, {"weights", weights_info}, {"source", in},
                  {"source_extra", src.manifest.extra}, {"run", echo(g, "sr")}};
    save_lightfield(out, result, src.manifest.bit_depth, extra);

    double volume_ms = 0.0;
    for (const json& e : events) volume_ms += e.at("ms").get<double>();
    const json report = {{"task", task.to_json()},
                         {"weights", weights_info},
                         {"input_shape", src.lf.data().shape()},
                         {"output_shape", result.data().shape()},
                         {"volumes", events},
                         {"volume_count", events.size()},
                         {"volume_ms", volume_ms},
                         {"total_ms", total_ms},
                         {"run", echo(g, "sr")}};
    const fs::path report_path = a.report.empty() ? fs::path(out) / "sr_report.json" : fs::path(a.report);
    write_json(report_path, report);
    std::cout << to_string(task.mode) << ": " << shape_string(src.lf.data().shape()) << " -> "
              << shape_string(result.data().shape()) << " in " << static_cast<long long>(total_ms) << " ms ("
              << events.size() << " volumes), report " << report_path.string() << '\n';
    return 0;
}

// ---------------------------------------------------------------- train

namespace {

std::vector<TrainingPatch> training_patches(const json& data) {
    PatchSpec spec;
    spec.size = data.value("patch_size", spec.size);
    spec.stride = data.value("stride", spec.stride);
    spec.plain_reject_threshold = data.value("plain_reject_threshold", spec.plain_reject_threshold);
    std::vector<TrainingPatch> patches;
    auto add = [&](const LightField4D& lf, const std::string& name) {
        auto p = extract_training_patches(luma(lf), spec, name);
        patches.insert(patches.end(), std::make_move_iterator(p.begin()), std::make_move_iterator(p.end()));
    };
    for (const json& s : data.value("scenes", json::array())) {
        SyntheticSpec ss;
        ss.seed = s.value("seed", ss.seed);
        ss.disparity = s.value("disparity", ss.disparity);
        ss.width = ss.height = s.value("size", ss.width);
        ss.angular = s.value("angular", ss.angular);
        ss.smoothness = s.value("smoothness", ss.smoothness);
        add(generate_synthetic(ss), "synthetic:" + std::to_string(ss.seed) + ":" + std::to_string(ss.disparity));
    }
    for (const json& dir : data.value("lightfields", json::array())) add(load_lightfield(dir.get<std::string>()).lf, dir);
    if (data.contains("patch_dir")) {
        auto p = load_patch_set(data.at("patch_dir").get<std::string>());
        patches.insert(patches.end(), std::make_move_iterator(p.begin()), std::make_move_iterator(p.end()));
    }
    require(!patches.empty(), "training data produced no patches (check scenes, lightfields, patch_size)");
    return patches;
}

} // namespace

int cmd_train(const Globals& g, const TrainArgs& a) {
    const json& cfg = section(g, "train");
    require(!cfg.empty(), "train needs a config file with a \"train\" section");
    const std::string model = cfg.value("model", std::string("evrn"));
    require(model == "evrn" || model == "nvs", "train.model must be evrn or nvs");
    const ModelKind kind = model == "evrn" ? ModelKind::Evrn : ModelKind::Nvs;
    const std::string out = pick(a.out, cfg, "out", "");
    require(!out.empty(), "train needs --out (checkpoint path)");

    TrainSchedule schedule = TrainSchedule::from_json(cfg.value("schedule", json::object()),
                                                      kind == ModelKind::Evrn ? TrainSchedule::for_evrn()
                                                                              : TrainSchedule::for_nvs());
    if (a.epochs) schedule.epochs = *a.epochs;
    if (a.max_steps) schedule.max_steps = *a.max_steps;
    schedule.validate();

    const json data = cfg.value("data", json::object());
    const std::vector<TrainingPatch> patches = training_patches(data);
    Rng init_rng(cfg.value("init_seed", g.config.value("seed", std::uint64_t{1})));

    json model_config;
    ParamStore init;
    TrainingObjective objective;
    TrainingPairSet evrn_pairs;
    std::vector<NvsPair> nvs_pairs;
    std::optional<NvsWeights> stage1;
    if (kind == ModelKind::Evrn) {
        EvrnConfig ec = EvrnConfig::from_json(cfg.value("evrn", json::object()));
        PairOptions po;
        po.task = sr_mode_from_string(cfg.value("task", std::string("ssr")));
        po.spatial_factor = data.value("spatial_factor", po.spatial_factor);
        po.patch_size = patches.front().lf.height();
        po.antialias = data.value("antialias", po.antialias);
        po.pasr = pasr_from(data.value("pasr", std::string("mean")));
        if (po.pasr == PasrMethod::Cnn) {
            require(data.contains("nvs_weights"), "PASR cnn pairs need train.data.nvs_weights");
            stage1 = NvsWeights::load(data.at("nvs_weights").get<std::string>());
            po.nvs = &*stage1;
        }
        ec.angular = static_cast<int>(patches.front().lf.angular_rho());
        evrn_pairs = build_evrn_pairs(patches, po);
        model_config = ec.to_json();
        init = EvrnWeights::initialize(ec, init_rng).params;
        objective = evrn_objective(evrn_pairs, ec);
        std::cout << "evrn " << to_string(po.task) << ": " << patches.size() << " patches, " << evrn_pairs.pairs.size()
                  << " volume pairs\n";
    } else {
        const NvsConfig nc = NvsConfig::from_json(cfg.value("nvs", json::object()));
        nvs_pairs = build_nvs_pairs(patches);
        model_config = nc.to_json();
        init = NvsWeights::initialize(nc, init_rng).params;
        objective = nvs_objective(nvs_pairs, nc);
        std::cout << "nvs: " << patches.size() << " patches, " << nvs_pairs.size() << " view pairs\n";
    }

    for (const std::string& p : {out, pick(a.weights_out, cfg, "weights_out", "")})
        if (fs::path(p).has_parent_path()) fs::create_directories(fs::path(p).parent_path());

    Trainer trainer(kind, model_config, init, schedule, objective);
    const std::string resume = pick(a.resume, cfg, "resume", "");
    if (!resume.empty()) {
        trainer.restore_checkpoint(resume);
        std::cout << "resumed from " << resume << " at epoch " << trainer.epoch() << ", step " << trainer.steps() << '\n';
    }

    std::ofstream log;
    if (!a.log.empty()) {
        log.open(a.log, std::ios::app);
        if (!log) throw IoError("cannot open log " + a.log);
    }
    while (!trainer.finished()) {
        const auto t0 = std::chrono::steady_clock::now();
        const double loss = trainer.run_epoch();
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const json line = {{"epoch", trainer.epoch() - 1}, {"loss", loss}, {"lr", trainer.optimizer().lr},
                           {"steps", trainer.steps()},     {"seconds", secs}};
        std::cout << line.dump() << std::endl;
        if (log) log << line.dump() << std::endl;
        trainer.save_checkpoint(out);
    }
    trainer.save_checkpoint(out);

    const std::string weights_out = pick(a.weights_out, cfg, "weights_out", "");
    if (!weights_out.empty()) save_model(weights_out, StoredModel{model, model_config, trainer.params()});
    write_json(fs::path(out).string() + ".run.json",
               {{"run", echo(g, "train")},
                {"model", model},
                {"model_config", model_config},
                {"schedule", schedule.to_json()},
                {"patches", patches.size()},
                {"epoch_losses", trainer.epoch_losses()},
                {"steps", trainer.steps()},
                {"checkpoint", out},
                {"weights", weights_out}});
    std::cout << "checkpoint " << out << (weights_out.empty() ? "" : ", weights " + weights_out) << '\n';
    return 0;
}

// ---------------------------------------------------------------- eval

int cmd_eval(const Globals& g, const EvalArgs& a) {
    const json& cfg = section(g, "eval");
    const std::string pred = pick(a.pred, cfg, "pred", ""), gt = pick(a.gt, cfg, "gt", "");
    require(!pred.empty() && !gt.empty(), "eval needs --pred and --gt");
    const std::string protocol = pick(a.protocol, cfg, "protocol", "ssr");
    const LightField4D p = load_lightfield(pred).lf, t = load_lightfield(gt).lf;
    MetricReport r;
    if (protocol == "ssr") r = eval_ssr(p, t);
    else if (protocol == "asr") r = eval_asr(p, t);
    else if (protocol == "all") r = eval_all(p, t);
    else throw ContractError("unknown protocol '" + protocol + "' (expected ssr, asr or all)");

    json report = r.to_json();
    report["pred"] = pred;
    report["gt"] = gt;
    report["run"] = echo(g, "eval");
    const fs::path out = pick(a.out, cfg, "out", (fs::path(pred) / ("eval_" + protocol + ".json")).string());
    write_json(out, report);
    if (!a.csv.empty()) {
        const bool fresh = !fs::exists(a.csv);
        std::ofstream csv(a.csv, std::ios::app);
        if (!csv) throw IoError("cannot write " + a.csv);
        if (fresh) csv << MetricReport::csv_header() << '\n';
        csv << r.csv_row(a.label.empty() ? pred : a.label) << '\n';
    }
    std::cout << r.protocol << ": " << r.masked_count() << " views, PSNR " << r.mean_psnr << " dB (pooled "
              << r.pooled_psnr << "), SSIM " << r.mean_ssim << ", report " << out.string() << '\n';
    return 0;
}

// ---------------------------------------------------------------- inspect

int cmd_inspect(const Globals&, const InspectArgs& a) {
    const fs::path path = a.path;
    json info;
    if (fs::is_directory(path) && fs::exists(path / "manifest.json")) {
        const LoadedLightField l = load_lightfield(path);
        const Tensor& d = l.lf.data();
        const auto [lo, hi] = std::minmax_element(d.values().begin(), d.values().end());
        double sum = 0.0;
        for (float v : d.values()) sum += v;
        info = {{"kind", "lightfield"},
                {"shape", d.shape()},
                {"manifest", l.manifest.to_json()},
                {"min", *lo},
                {"max", *hi},
                {"mean", sum / static_cast<double>(d.size())}};
        if (l.lf.channels() == 1) {
            const std::vector<EPIVolume> h = slice(l.lf, AngularAxis::Tau), v = slice(l.lf, AngularAxis::Rho);
            info["volumes"] = {{"horizontal", {{"count", h.size()}, {"shape", h.front().data().shape()}}},
                               {"vertical", {{"count", v.size()}, {"shape", v.front().data().shape()}}}};
        }
    } else if (fs::is_directory(path) && fs::exists(path / "index.json")) {
        const std::vector<TrainingPatch> patches = load_patch_set(path);
        info = {{"kind", "patch_set"}, {"count", patches.size()}};
        if (!patches.empty()) info["patch_shape"] = patches.front().lf.data().shape();
    } else if (fs::is_regular_file(path)) {
        const json header = WeightContainer::read_header(path);
        json entries = json::array();
        long long params = 0;
        for (const json& e : header.at("entries")) {
            long long n = 1;
            for (const json& s : e.at("shape")) n *= s.get<long long>();
            params += e.at("dtype") == "f32" ? n : 0;
            entries.push_back({{"name", e.at("name")}, {"shape", e.at("shape")}, {"dtype", e.at("dtype")}});
        }
        info = {{"kind", "container"}, {"metadata", header.value("metadata", json::object())}, {"entries", entries},
                {"f32_values", params}};
        if (fs::exists(sidecar_path(path))) {
            std::ifstream in(sidecar_path(path));
            info["sidecar"] = json::parse(in);
        }
    } else {
        throw IoError(path.string() + " is not a light field, patch set or container");
    }
    std::cout << info.dump(2) << '\n';
    return 0;
}

} // namespace lfsr::cli
