#pragma once

#include "lfsr/evrn.hpp"
#include "lfsr/lightfield.hpp"
#include "lfsr/nvs.hpp"
#include "lfsr/optim.hpp"
#include "lfsr/pipeline.hpp"
#include "lfsr/resample.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace lfsr {

struct PairProvenance {
    std::string scene;
    Index y = 0;
    Index x = 0;
    AngularAxis axis = AngularAxis::Tau;
    Index index = 0;
    SrMode task = SrMode::SSR;

    nlohmann::json to_json() const;
    static PairProvenance from_json(const nlohmann::json& j);
};

struct VolumePair {
    EPIVolume input;
    EPIVolume target;
    PairProvenance provenance;
};

/// How low-resolution inputs are derived from ground-truth patches.
struct PairOptions {
    SrMode task = SrMode::SSR;
    int spatial_factor = 2;
    /// Required square spatial extent of every patch.
    Index patch_size = 48;
    bool antialias = true;
    PasrMethod pasr = PasrMethod::Mean;
    const NvsWeights* nvs = nullptr;

    nlohmann::json to_json() const;
};

struct TrainingPairSet {
    SrMode task = SrMode::SSR;
    std::vector<VolumePair> pairs;
};

/// Degrades a ground-truth patch and applies the preliminary up-sampling for
/// the task: P_S (SSR), P_A (ASR) or P_SA (ASSR), all the shape of the patch.
LightField4D preliminary_input(const LightField4D& patch, const PairOptions& options);

/// 9 horizontal plus 9 vertical volume pairs per 9x9 Y patch.
TrainingPairSet build_evrn_pairs(const std::vector<TrainingPatch>& patches, const PairOptions& options);

/// Rebuilds one pair from the full scene light field and its provenance.
VolumePair regenerate_pair(const LightField4D& scene, const PairProvenance& provenance, const PairOptions& options);

/// Spatial window of a light field.
LightField4D crop_spatial(const LightField4D& lf, Index y, Index x, Index height, Index width);

struct NvsPair {
    Tensor a;
    Tensor b;
    Tensor target;
};

/// Pairs (slice t-1, slice t+1) -> slice t for t = 1, 3, 5, ... (0-based),
/// i.e. the views that are missing after even-index decimation.
std::vector<NvsPair> nvs_pairs_from_volume(const EPIVolume& volume);
/// Both orientations of every patch.
std::vector<NvsPair> build_nvs_pairs(const std::vector<TrainingPatch>& patches);

struct TrainSchedule {
    double initial_lr = 2e-4;
    int halve_every = 10;
    double weight_decay = 1e-4;
    int epochs = 1;
    int batch_size = 8;
    std::uint64_t seed = 1;
    /// Side of a random spatial window cut from every pair per step; 0 uses whole pairs.
    Index crop = 0;
    /// Hard cap on optimizer steps; 0 means no cap.
    std::int64_t max_steps = 0;

    static TrainSchedule for_evrn();
    static TrainSchedule for_nvs();
    StepSchedule lr_schedule() const { return {initial_lr, halve_every}; }
    void validate() const;
    nlohmann::json to_json() const;
    static TrainSchedule from_json(const nlohmann::json& j, const TrainSchedule& defaults);
};

enum class ModelKind { Evrn, Nvs };

std::string to_string(ModelKind kind);

struct CropWindow {
    Index s1 = 0;
    Index s2 = 0;
    /// 0 means the full extent.
    Index size = 0;
};

/// What the trainer optimizes: a per-pair l1 loss built on a tape.
struct TrainingObjective {
    std::size_t count = 0;
    /// Spatial (s1, s2) extent of pair i, used to draw crop windows.
    std::function<std::pair<Index, Index>(std::size_t)> extent;
    std::function<ag::Var(GradTape&, std::size_t, const CropWindow&)> loss;
};

TrainingObjective evrn_objective(const TrainingPairSet& pairs, const EvrnConfig& config);
TrainingObjective nvs_objective(const std::vector<NvsPair>& pairs, const NvsConfig& config);

/// Mean full-size l1 loss over all pairs.
double evaluate(const TrainingObjective& objective, const ParamStore& params);

class TrainingDiverged : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Mini-batch AdamW (EVRN) / Adam (NVS) loop with a step-decay schedule.
///
/// Batch gradients are summed in pair order, so results do not depend on the
/// thread count; crops are drawn serially from the seeded generator.
class Trainer {
public:
    Trainer(ModelKind kind, nlohmann::json model_config, ParamStore init, TrainSchedule schedule,
            TrainingObjective objective);

    /// One pass over the pairs (cut short by max_steps). Returns the mean pair loss.
    double run_epoch();
    /// Runs epochs until the schedule or the step cap is exhausted.
    void run(const std::function<void(int epoch, double loss)>& on_epoch = {});
    bool finished() const;

    int epoch() const noexcept { return epoch_; }
    std::int64_t steps() const noexcept { return optimizer_.step; }
    const ParamStore& params() const noexcept { return params_; }
    const AdamWState& optimizer() const noexcept { return optimizer_; }
    const std::vector<double>& epoch_losses() const noexcept { return epoch_losses_; }
    const std::vector<double>& step_losses() const noexcept { return step_losses_; }
    const TrainSchedule& schedule() const noexcept { return schedule_; }

    /// Parameters, double-precision moments, and a JSON state block
    /// {model, config, schedule, epoch, rng, optimizer, losses}.
    void save_checkpoint(const std::filesystem::path& path) const;
    /// Restores state saved by a trainer with the same model, config and schedule.
    void restore_checkpoint(const std::filesystem::path& path);

private:
    void step(const std::vector<std::size_t>& batch, double& loss_sum);

    ModelKind kind_;
    nlohmann::json model_config_;
    ParamStore params_;
    TrainSchedule schedule_;
    TrainingObjective objective_;
    AdamWState optimizer_;
    Rng rng_;
    int epoch_ = 0;
    std::vector<double> epoch_losses_;
    std::vector<double> step_losses_;
};

struct TrainResult {
    ParamStore params;
    std::vector<double> epoch_losses;
    std::vector<double> step_losses;
};

TrainResult train_evrn(const TrainingPairSet& pairs, const EvrnWeights& init, const TrainSchedule& schedule);
TrainResult train_nvs(const std::vector<NvsPair>& pairs, const NvsWeights& init, const TrainSchedule& schedule);

} // namespace lfsr
