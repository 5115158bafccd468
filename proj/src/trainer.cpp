#include "lfsr/trainer.hpp"

#include "lfsr/container.hpp"
#include "lfsr/error.hpp"
#include "lfsr/model_io.hpp"
#include "lfsr/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace lfsr {
namespace {

AngularAxis axis_from_string(const std::string& s) {
    if (s == "rho") return AngularAxis::Rho;
    if (s == "tau") return AngularAxis::Tau;
    throw ContractError("unknown angular axis '" + s + "'");
}

// (s1, a, s2) window -> (size, a, size, 1) feature map.
Tensor crop_volume(const Tensor& v, const CropWindow& w) {
    const Index S1 = v.dim(0), A = v.dim(1), S2 = v.dim(2);
    if (w.size == 0) return v.reshaped(Shape{S1, A, S2, 1});
    Tensor out(Shape{w.size, A, w.size, 1});
    for (Index i = 0; i < w.size; ++i)
        for (Index a = 0; a < A; ++a)
            for (Index j = 0; j < w.size; ++j) out[(i * A + a) * w.size + j] = v[((w.s1 + i) * A + a) * S2 + w.s2 + j];
    return out;
}

// (h, w) window -> (size, size) image.
Tensor crop_image(const Tensor& img, const CropWindow& w) {
    if (w.size == 0) return img;
    const Index W = img.dim(1);
    Tensor out(Shape{w.size, w.size});
    for (Index i = 0; i < w.size; ++i)
        for (Index j = 0; j < w.size; ++j) out[i * w.size + j] = img[(w.s1 + i) * W + w.s2 + j];
    return out;
}

LightField4D upsample_pssr(const LightField4D& lf, int factor) {
    return vsr(lf, AngularAxis::Tau, [factor](const EPIVolume& v) { return pssr_volume(v, factor); });
}

LightField4D upsample_pasr(const LightField4D& lf, const PairOptions& o) {
    const VolumeSrFn f = [&o](const EPIVolume& v) { return pasr_volume(v, o.pasr, o.nvs); };
    return vsr(vsr(lf, AngularAxis::Tau, f), AngularAxis::Rho, f);
}

void check_patch(const LightField4D& patch, const PairOptions& options) {
    require(patch.channels() == 1, "training patches must be single-channel (Y)");
    require(patch.height() == options.patch_size && patch.width() == options.patch_size,
            "training patch must be " + std::to_string(options.patch_size) + "x" + std::to_string(options.patch_size) +
                ", got " + std::to_string(patch.height()) + "x" + std::to_string(patch.width()));
    require(patch.angular_rho() == 9 && patch.angular_tau() == 9, "training patches must have 9x9 views");
}

} // namespace

nlohmann::json PairProvenance::to_json() const {
    return {{"scene", scene}, {"y", y}, {"x", x}, {"axis", lfsr::to_string(axis)}, {"index", index},
            {"task", lfsr::to_string(task)}};
}

PairProvenance PairProvenance::from_json(const nlohmann::json& j) {
    PairProvenance p;
    p.scene = j.at("scene").get<std::string>();
    p.y = j.at("y").get<Index>();
    p.x = j.at("x").get<Index>();
    p.axis = axis_from_string(j.at("axis").get<std::string>());
    p.index = j.at("index").get<Index>();
    p.task = sr_mode_from_string(j.at("task").get<std::string>());
    return p;
}

nlohmann::json PairOptions::to_json() const {
    return {{"task", lfsr::to_string(task)}, {"spatial_factor", spatial_factor}, {"patch_size", patch_size},
            {"antialias", antialias}, {"pasr", pasr == PasrMethod::Mean ? "mean" : "cnn"}};
}

LightField4D preliminary_input(const LightField4D& patch, const PairOptions& options) {
    require(patch.channels() == 1, "preliminary_input expects a single-channel light field");
    switch (options.task) {
    case SrMode::SSR: {
        require(options.spatial_factor > 1, "SSR pairs need a spatial factor > 1");
        return upsample_pssr(lf_spatial_downsample(patch, options.spatial_factor, options.antialias),
                             options.spatial_factor);
    }
    case SrMode::ASR: return upsample_pasr(angular_decimate(patch), options);
    case SrMode::ASSR: {
        require(options.spatial_factor > 1, "ASSR pairs need a spatial factor > 1");
        const LightField4D low = angular_decimate(lf_spatial_downsample(patch, options.spatial_factor, options.antialias));
        return upsample_pasr(upsample_pssr(low, options.spatial_factor), options);
    }
    }
    throw ContractError("unknown SR mode");
}

TrainingPairSet build_evrn_pairs(const std::vector<TrainingPatch>& patches, const PairOptions& options) {
    require(options.pasr == PasrMethod::Mean || options.nvs != nullptr, "nvs-cnn pairs require NVS weights");
    TrainingPairSet set;
    set.task = options.task;
    for (const TrainingPatch& p : patches) {
        check_patch(p.lf, options);
        const LightField4D input = preliminary_input(p.lf, options);
        for (AngularAxis axis : {AngularAxis::Tau, AngularAxis::Rho}) {
            std::vector<EPIVolume> in = slice(input, axis);
            std::vector<EPIVolume> gt = slice(p.lf, axis);
            for (std::size_t i = 0; i < in.size(); ++i) {
                set.pairs.push_back({std::move(in[i]), std::move(gt[i]),
                                     {p.scene, p.y, p.x, axis, static_cast<Index>(i), options.task}});
            }
        }
    }
    return set;
}

LightField4D crop_spatial(const LightField4D& lf, Index y, Index x, Index height, Index width) {
    require(y >= 0 && x >= 0 && height > 0 && width > 0 && y + height <= lf.height() && x + width <= lf.width(),
            "spatial crop outside the light field");
    LightField4D out(height, width, lf.angular_rho(), lf.angular_tau(), lf.channels(), lf.color_space());
    const Index row = lf.angular_rho() * lf.angular_tau() * lf.channels();
    for (Index i = 0; i < height; ++i) {
        const float* src = lf.data().data() + ((y + i) * lf.width() + x) * row;
        std::copy(src, src + width * row, out.data().data() + i * width * row);
    }
    return out;
}

VolumePair regenerate_pair(const LightField4D& scene, const PairProvenance& provenance, const PairOptions& options) {
    require(provenance.task == options.task, "provenance task does not match the pair options");
    const LightField4D patch = crop_spatial(scene, provenance.y, provenance.x, options.patch_size, options.patch_size);
    check_patch(patch, options);
    const LightField4D input = preliminary_input(patch, options);
    const auto in = slice(input, provenance.axis);
    const auto gt = slice(patch, provenance.axis);
    require(provenance.index >= 0 && provenance.index < static_cast<Index>(in.size()), "provenance index out of range");
    const auto i = static_cast<std::size_t>(provenance.index);
    return {in[i], gt[i], provenance};
}

std::vector<NvsPair> nvs_pairs_from_volume(const EPIVolume& volume) {
    require(volume.angular() >= 3, "NVS pairs need an angular extent of at least 3");
    std::vector<NvsPair> pairs;
    for (Index t = 1; t + 1 < volume.angular(); t += 2) {
        pairs.push_back({volume.a_slice(t - 1), volume.a_slice(t + 1), volume.a_slice(t)});
    }
    return pairs;
}

std::vector<NvsPair> build_nvs_pairs(const std::vector<TrainingPatch>& patches) {
    std::vector<NvsPair> pairs;
    for (const TrainingPatch& p : patches) {
        require(p.lf.channels() == 1, "NVS training patches must be single-channel (Y)");
        for (AngularAxis axis : {AngularAxis::Tau, AngularAxis::Rho}) {
            for (const EPIVolume& v : slice(p.lf, axis)) {
                for (NvsPair& pair : nvs_pairs_from_volume(v)) pairs.push_back(std::move(pair));
            }
        }
    }
    return pairs;
}

TrainSchedule TrainSchedule::for_evrn() { return {}; }

TrainSchedule TrainSchedule::for_nvs() {
    TrainSchedule s;
    s.weight_decay = 0.0;
    return s;
}

void TrainSchedule::validate() const {
    require(initial_lr > 0.0 && std::isfinite(initial_lr), "learning rate must be positive");
    require(halve_every > 0, "halve_every must be positive");
    require(weight_decay >= 0.0, "weight decay must be non-negative");
    require(epochs >= 0, "epochs must be non-negative");
    require(batch_size > 0, "batch size must be positive");
    require(crop >= 0, "crop must be non-negative");
    require(max_steps >= 0, "max_steps must be non-negative");
}

nlohmann::json TrainSchedule::to_json() const {
    return {{"initial_lr", initial_lr}, {"halve_every", halve_every}, {"weight_decay", weight_decay},
            {"epochs", epochs},         {"batch_size", batch_size},   {"seed", seed},
            {"crop", crop},             {"max_steps", max_steps}};
}

TrainSchedule TrainSchedule::from_json(const nlohmann::json& j, const TrainSchedule& defaults) {
    TrainSchedule s = defaults;
    s.initial_lr = j.value("initial_lr", s.initial_lr);
    s.halve_every = j.value("halve_every", s.halve_every);
    s.weight_decay = j.value("weight_decay", s.weight_decay);
    s.epochs = j.value("epochs", s.epochs);
    s.batch_size = j.value("batch_size", s.batch_size);
    s.seed = j.value("seed", s.seed);
    s.crop = j.value("crop", s.crop);
    s.max_steps = j.value("max_steps", s.max_steps);
    s.validate();
    return s;
}

std::string to_string(ModelKind kind) { return kind == ModelKind::Evrn ? "evrn" : "nvs"; }

TrainingObjective evrn_objective(const TrainingPairSet& pairs, const EvrnConfig& config) {
    for (const VolumePair& p : pairs.pairs) {
        require(p.input.data().shape() == p.target.data().shape(), "EVRN pair shapes differ");
        require(p.input.angular() == config.angular, "EVRN pair angular extent does not match the config");
    }
    TrainingObjective o;
    o.count = pairs.pairs.size();
    o.extent = [&pairs](std::size_t i) {
        const EPIVolume& v = pairs.pairs[i].input;
        return std::pair{v.s1(), v.s2()};
    };
    o.loss = [&pairs, config](GradTape& tape, std::size_t i, const CropWindow& w) {
        const VolumePair& p = pairs.pairs[i];
        const ag::Var out = evrn::graph(tape, ag::constant(crop_volume(p.input.data(), w)), config);
        return ag::l1_loss(out, crop_volume(p.target.data(), w));
    };
    return o;
}

TrainingObjective nvs_objective(const std::vector<NvsPair>& pairs, const NvsConfig& config) {
    for (const NvsPair& p : pairs) {
        require(p.a.shape() == p.b.shape() && p.a.shape() == p.target.shape() && p.a.shape().size() == 2,
                "NVS pair images must be 2D and share a shape");
    }
    TrainingObjective o;
    o.count = pairs.size();
    o.extent = [&pairs](std::size_t i) { return std::pair{pairs[i].a.dim(0), pairs[i].a.dim(1)}; };
    o.loss = [&pairs, config](GradTape& tape, std::size_t i, const CropWindow& w) {
        const NvsPair& p = pairs[i];
        const Tensor target = crop_image(p.target, w);
        const ag::Var out =
            nvs::graph(tape, ag::constant(nvs::stack_pair(crop_image(p.a, w), crop_image(p.b, w))), config);
        return ag::l1_loss(out, target.reshaped(Shape{target.dim(0), target.dim(1), 1}));
    };
    return o;
}

double evaluate(const TrainingObjective& objective, const ParamStore& params) {
    require(objective.count > 0, "cannot evaluate an empty pair set");
    std::vector<double> losses(objective.count);
    parallel_for(objective.count, [&](std::size_t i) {
        GradTape tape(params, false);
        losses[i] = objective.loss(tape, i, {}).item();
    });
    return std::accumulate(losses.begin(), losses.end(), 0.0) / static_cast<double>(losses.size());
}

Trainer::Trainer(ModelKind kind, nlohmann::json model_config, ParamStore init, TrainSchedule schedule,
                 TrainingObjective objective)
    : kind_(kind), model_config_(std::move(model_config)), params_(std::move(init)), schedule_(schedule),
      objective_(std::move(objective)), rng_(schedule.seed) {
    schedule_.validate();
    require(objective_.count > 0, "training needs at least one pair");
    optimizer_.weight_decay = schedule_.weight_decay;
    optimizer_.lr = schedule_.lr_schedule().at(0);
}

bool Trainer::finished() const {
    return epoch_ >= schedule_.epochs || (schedule_.max_steps > 0 && optimizer_.step >= schedule_.max_steps);
}

void Trainer::step(const std::vector<std::size_t>& batch, double& loss_sum) {
    std::vector<CropWindow> windows(batch.size());
    for (std::size_t k = 0; k < batch.size(); ++k) {
        const auto [s1, s2] = objective_.extent(batch[k]);
        const Index c = schedule_.crop;
        if (c == 0 || (c >= s1 && c >= s2)) continue;
        require(c <= s1 && c <= s2, "crop larger than a training pair");
        windows[k] = {std::uniform_int_distribution<Index>(0, s1 - c)(rng_),
                      std::uniform_int_distribution<Index>(0, s2 - c)(rng_), c};
    }
    std::vector<GradMap> grads(batch.size());
    std::vector<double> losses(batch.size());
    parallel_for(batch.size(), [&](std::size_t k) {
        GradTape tape(params_, true);
        const ag::Var loss = objective_.loss(tape, batch[k], windows[k]);
        losses[k] = loss.item();
        grads[k] = tape.backward(loss);
    });
    double batch_loss = 0.0;
    for (std::size_t k = 0; k < batch.size(); ++k) {
        if (!std::isfinite(losses[k])) {
            throw TrainingDiverged("training diverged: non-finite loss at epoch " + std::to_string(epoch_) + ", step " +
                                   std::to_string(optimizer_.step) + ", pair " + std::to_string(batch[k]) +
                                   " (lr " + std::to_string(optimizer_.lr) + ")");
        }
        batch_loss += losses[k];
    }
    GradMap total = std::move(grads[0]);
    const float inv = 1.0f / static_cast<float>(batch.size());
    for (auto& [name, g] : total) {
        for (std::size_t k = 1; k < batch.size(); ++k) {
            const Tensor& other = grads[k].at(name);
            for (Index i = 0; i < g.size(); ++i) g[i] += other[i];
        }
        for (float& v : g.values()) v *= inv;
        require(g.all_finite(), "training diverged: non-finite gradient for " + name);
    }
    if (kind_ == ModelKind::Evrn) adamw_step(optimizer_, params_, total);
    else adam_step(optimizer_, params_, total);
    loss_sum += batch_loss;
    step_losses_.push_back(batch_loss / static_cast<double>(batch.size()));
}

double Trainer::run_epoch() {
    optimizer_.lr = schedule_.lr_schedule().at(epoch_);
    std::vector<std::size_t> order(objective_.count);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng_);
    double loss_sum = 0.0;
    std::size_t seen = 0;
    const auto B = static_cast<std::size_t>(schedule_.batch_size);
    for (std::size_t start = 0; start < order.size(); start += B) {
        if (schedule_.max_steps > 0 && optimizer_.step >= schedule_.max_steps) break;
        const std::vector<std::size_t> batch(order.begin() + static_cast<std::ptrdiff_t>(start),
                                             order.begin() + static_cast<std::ptrdiff_t>(std::min(start + B, order.size())));
        step(batch, loss_sum);
        seen += batch.size();
    }
    const double mean = seen > 0 ? loss_sum / static_cast<double>(seen) : 0.0;
    epoch_losses_.push_back(mean);
    ++epoch_;
    return mean;
}

void Trainer::run(const std::function<void(int, double)>& on_epoch) {
    while (!finished()) {
        const double loss = run_epoch();
        if (on_epoch) on_epoch(epoch_ - 1, loss);
    }
}

void Trainer::save_checkpoint(const std::filesystem::path& path) const {
    WeightContainer c;
    put_params(c, params_, "param/");
    for (const auto& [name, m] : optimizer_.moments) {
        c.put_f64("adam.m/" + name, params_.get(name).shape(), m.first);
        c.put_f64("adam.v/" + name, params_.get(name).shape(), m.second);
    }
    std::ostringstream rng_state;
    rng_state << rng_;
    c.metadata = {{"kind", "checkpoint"},
                  {"model", to_string(kind_)},
                  {"config", model_config_},
                  {"config_hash", config_hash(model_config_)},
                  {"schedule", schedule_.to_json()},
                  {"epoch", epoch_},
                  {"rng", rng_state.str()},
                  {"optimizer",
                   {{"lr", optimizer_.lr},
                    {"beta1", optimizer_.beta1},
                    {"beta2", optimizer_.beta2},
                    {"eps", optimizer_.eps},
                    {"weight_decay", optimizer_.weight_decay},
                    {"step", optimizer_.step}}},
                  {"epoch_losses", epoch_losses_},
                  {"step_losses", step_losses_}};
    c.save(path);
    std::ofstream side(sidecar_path(path));
    side << c.metadata.dump(2) << '\n';
    if (!side) throw IoError("cannot write checkpoint sidecar for " + path.string());
}

void Trainer::restore_checkpoint(const std::filesystem::path& path) {
    const WeightContainer c = WeightContainer::load(path);
    const nlohmann::json& m = c.metadata;
    require(m.value("kind", "") == "checkpoint", path.string() + " is not a training checkpoint");
    require(m.at("model").get<std::string>() == to_string(kind_), "checkpoint holds a different model kind");
    require(m.at("config") == model_config_, "checkpoint config differs from the requested model config");
    require(m.at("schedule") == schedule_.to_json(), "checkpoint schedule differs from the requested schedule");
    ParamStore params = take_params(c, "param/");
    check_same_layout(params_, params, "checkpoint");
    AdamWState opt;
    const auto& o = m.at("optimizer");
    opt.lr = o.at("lr").get<double>();
    opt.beta1 = o.at("beta1").get<double>();
    opt.beta2 = o.at("beta2").get<double>();
    opt.eps = o.at("eps").get<double>();
    opt.weight_decay = o.at("weight_decay").get<double>();
    opt.step = o.at("step").get<std::int64_t>();
    for (const ParamEntry& e : params.entries()) {
        const std::string mk = "adam.m/" + e.name;
        if (!c.contains(mk)) continue;
        opt.moments[e.name] = {c.f64(mk), c.f64("adam.v/" + e.name)};
    }
    std::istringstream rng_state(m.at("rng").get<std::string>());
    Rng rng;
    rng_state >> rng;
    require(!rng_state.fail(), "checkpoint rng state is corrupt");
    params_ = std::move(params);
    optimizer_ = std::move(opt);
    rng_ = rng;
    epoch_ = m.at("epoch").get<int>();
    epoch_losses_ = m.at("epoch_losses").get<std::vector<double>>();
    step_losses_ = m.at("step_losses").get<std::vector<double>>();
}

TrainResult train_evrn(const TrainingPairSet& pairs, const EvrnWeights& init, const TrainSchedule& schedule) {
    Trainer t(ModelKind::Evrn, init.config.to_json(), init.params, schedule, evrn_objective(pairs, init.config));
    t.run();
    return {t.params(), t.epoch_losses(), t.step_losses()};
}

TrainResult train_nvs(const std::vector<NvsPair>& pairs, const NvsWeights& init, const TrainSchedule& schedule) {
    Trainer t(ModelKind::Nvs, init.config.to_json(), init.params, schedule, nvs_objective(pairs, init.config));
    t.run();
    return {t.params(), t.epoch_losses(), t.step_losses()};
}

} // namespace lfsr
