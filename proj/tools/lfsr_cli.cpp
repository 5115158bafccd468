#include "commands.hpp"

#include "lfsr/error.hpp"
#include "lfsr/parallel.hpp"
#include "lfsr/trainer.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

using namespace lfsr;
using namespace lfsr::cli;

namespace {

// Exit codes: 0 ok, 1 unexpected, 2 usage, 3 contract, 4 I/O, 5 training diverged.
int guarded(const std::function<int()>& body) {
    try {
        return body();
    } catch (const ContractError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const RangeError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const IoError& e) {
        std::cerr << "I/O error: " << e.what() << '\n';
        return 4;
    } catch (const TrainingDiverged& e) {
        std::cerr << "training diverged: " << e.what() << '\n';
        return 5;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}

nlohmann::json read_config(const std::string& path) {
    if (path.empty()) return nlohmann::json::object();
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path);
    try {
        return nlohmann::json::parse(in, nullptr, true, true);
    } catch (const nlohmann::json::parse_error& e) {
        throw IoError("malformed config " + path + ": " + e.what());
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Light-field super-resolution toolkit"};
    app.require_subcommand(1);

    Globals g;
    app.add_option("--config", g.config_path, "JSON run config; flags override its values");
    app.add_option("--threads", g.threads, "Worker threads (0 = hardware concurrency)")->check(CLI::NonNegativeNumber);
    app.add_flag("--deterministic", g.deterministic, "Force serial execution");

    GenSyntheticArgs gs;
    auto* gen = app.add_subcommand("gen-synthetic", "Write a synthetic fronto-parallel light field");
    gen->add_option("--out", gs.out, "Output light-field directory");
    gen->add_option("--seed", gs.seed, "Texture seed");
    gen->add_option("--disparity", gs.disparity, "Pixel shift per angular step");
    gen->add_option("--width", gs.width);
    gen->add_option("--height", gs.height);
    gen->add_option("--angular", gs.angular, "Odd angular extent");
    gen->add_option("--channels", gs.channels, "1 (Y) or 3 (RGB)");
    gen->add_option("--smoothness", gs.smoothness, "Texture blur sigma");
    gen->add_option("--bit-depth", gs.bit_depth, "8 or 16");
    gen->add_option("--dense-out", gs.dense_out, "Also write (2A-1)x(2A-1) half-step views (even disparity)");

    DegradeArgs dg;
    auto* deg = app.add_subcommand("degrade", "Bicubic down-sampling and/or angular decimation");
    deg->add_option("--in", dg.in);
    deg->add_option("--out", dg.out);
    deg->add_option("--spatial-factor", dg.spatial_factor);
    deg->add_flag("--angular-decimate", dg.angular_decimate, "Keep only the both-even views");
    deg->add_flag("--no-antialias", dg.no_antialias);

    SrArgs sr;
    auto* srcmd = app.add_subcommand("sr", "Two-stage super-resolution of a light field");
    srcmd->add_option("--in", sr.in);
    srcmd->add_option("--out", sr.out);
    srcmd->add_option("--mode", sr.mode, "ssr, asr or assr");
    srcmd->add_option("--factor", sr.factor, "Spatial factor");
    srcmd->add_option("--pssr", sr.pssr, "bicubic or external");
    srcmd->add_option("--pasr", sr.pasr, "mean or cnn");
    srcmd->add_option("--evrn", sr.evrn, "EVRN weights");
    srcmd->add_option("--nvs", sr.nvs, "NVS-CNN weights");
    srcmd->add_option("--external", sr.external, "Pre-up-sampled light field for --pssr external");
    srcmd->add_flag("--zero-evrn", sr.zero_evrn, "Use an all-zero EVRN (stage-1 output only)");
    srcmd->add_option("--report", sr.report, "Timing/shape report path (default <out>/sr_report.json)");

    TrainArgs tr;
    auto* train = app.add_subcommand("train", "Train EVRN or NVS-CNN from a config");
    train->add_option("--out", tr.out, "Checkpoint path");
    train->add_option("--resume", tr.resume, "Checkpoint to resume from");
    train->add_option("--weights-out", tr.weights_out, "Final weights path");
    train->add_option("--epochs", tr.epochs);
    train->add_option("--max-steps", tr.max_steps);
    train->add_option("--log", tr.log, "Append per-epoch JSON lines here");

    EvalArgs ev;
    auto* eval = app.add_subcommand("eval", "PSNR/SSIM report for a predicted light field");
    eval->add_option("--pred", ev.pred);
    eval->add_option("--gt", ev.gt);
    eval->add_option("--protocol", ev.protocol, "ssr, asr or all");
    eval->add_option("--out", ev.out, "Report JSON path");
    eval->add_option("--csv", ev.csv, "Append a CSV row here");
    eval->add_option("--label", ev.label, "Row label for --csv");

    InspectArgs in;
    auto* inspect = app.add_subcommand("inspect", "Print light-field, patch-set or weight metadata");
    inspect->add_option("path", in.path)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    return guarded([&] {
        g.config = read_config(g.config_path);
        const int threads = g.threads > 0 ? g.threads : g.config.value("threads", 0);
        const bool deterministic = g.deterministic || g.config.value("deterministic", false);
        g.deterministic = deterministic;
        if (deterministic) set_thread_count(1);
        else if (threads > 0) set_thread_count(threads);

        if (*gen) return cmd_gen_synthetic(g, gs);
        if (*deg) return cmd_degrade(g, dg);
        if (*srcmd) return cmd_sr(g, sr);
        if (*train) return cmd_train(g, tr);
        if (*eval) return cmd_eval(g, ev);
        return cmd_inspect(g, in);
    });
}
