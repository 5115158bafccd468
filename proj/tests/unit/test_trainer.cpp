#include "oracles.hpp"

#include "lfsr/error.hpp"
#include "lfsr/synthetic.hpp"
#include "lfsr/trainer.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <set>

using namespace lfsr;
using namespace lfsr::testing;

namespace {

constexpr Index kPatch = 16;

std::vector<TrainingPatch> scene_patches(std::uint64_t seed, int d) {
    const LightField4D lf = generate_synthetic({seed, d, 40, 40, 9, 1, 1.5});
    return extract_training_patches(lf, {kPatch, 16, 0.02}, "scene" + std::to_string(seed));
}

PairOptions options(SrMode task) {
    PairOptions o;
    o.task = task;
    o.patch_size = kPatch;
    return o;
}

EvrnConfig tiny_evrn() {
    EvrnConfig c;
    c.residual_blocks = 1;
    c.channels = 4;
    c.reduction = 2;
    return c;
}

TrainSchedule quick(int epochs) {
    TrainSchedule s = TrainSchedule::for_evrn();
    s.epochs = epochs;
    s.batch_size = 4;
    s.initial_lr = 1e-3;
    s.crop = 8;
    s.seed = 42;
    return s;
}

} // namespace

TEST(Pairs, EighteenPerPatchForEveryTask) {
    const auto patches = scene_patches(1, 1);
    ASSERT_EQ(patches.size(), 4u);
    for (SrMode m : {SrMode::SSR, SrMode::ASR, SrMode::ASSR}) {
        const TrainingPairSet set = build_evrn_pairs({patches[0]}, options(m));
        ASSERT_EQ(set.pairs.size(), 18u);
        std::size_t horizontal = 0;
        for (const VolumePair& p : set.pairs) {
            EXPECT_EQ(p.input.data().shape(), p.target.data().shape());
            EXPECT_EQ(p.input.angular(), 9);
            horizontal += p.input.orientation() == Orientation::Horizontal ? 1 : 0;
        }
        EXPECT_EQ(horizontal, 9u);
    }
}

TEST(Pairs, AsrInputsCarryDecimatedViews) {
    const auto patches = scene_patches(2, 2);
    const TrainingPairSet set = build_evrn_pairs({patches[0]}, options(SrMode::ASR));
    const LightField4D dec = angular_decimate(patches[0].lf);
    EXPECT_EQ(dec.angular_rho(), 5);
    // Horizontal volume at tau = 2 holds decimated column tau = 1 at even rho.
    const VolumePair& p = set.pairs[2];
    ASSERT_EQ(p.provenance.index, 2);
    const EPIVolume low = slice(dec, AngularAxis::Tau)[1];
    for (Index a = 0; a < 5; ++a) EXPECT_EQ(p.input.a_slice(2 * a), low.a_slice(a));
    EXPECT_THROW(build_evrn_pairs({TrainingPatch{LightField4D(8, 8, 9, 9, 1, ColorSpace::Y), "", 0, 0}},
                                  options(SrMode::SSR)),
                 ContractError);
}

TEST(Pairs, RegeneratedFromProvenance) {
    const LightField4D scene = generate_synthetic({3, 1, 32, 32, 9, 1, 1.5});
    const auto patches = extract_training_patches(scene, {kPatch, 16, 0.02}, "s");
    for (SrMode m : {SrMode::SSR, SrMode::ASSR}) {
        const TrainingPairSet set = build_evrn_pairs(patches, options(m));
        for (std::size_t i : {0u, 13u, 40u, 71u}) {
            const VolumePair again = regenerate_pair(scene, set.pairs[i].provenance, options(m));
            EXPECT_EQ(again.input, set.pairs[i].input);
            EXPECT_EQ(again.target, set.pairs[i].target);
        }
    }
    const PairProvenance p = build_evrn_pairs(patches, options(SrMode::SSR)).pairs[30].provenance;
    const PairProvenance q = PairProvenance::from_json(p.to_json());
    EXPECT_EQ(q.to_json(), p.to_json());
}

TEST(NvsPairs, OddTargetsFromNeighbours) {
    Rng rng(4);
    const EPIVolume v(random_tensor({4, 9, 5}, rng), Orientation::Horizontal, 0);
    const auto pairs = nvs_pairs_from_volume(v);
    ASSERT_EQ(pairs.size(), 4u);
    std::set<Index> targets;
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        const Index t = 2 * static_cast<Index>(k) + 1;
        targets.insert(t);
        EXPECT_EQ(pairs[k].target, v.a_slice(t));
        EXPECT_EQ(pairs[k].a, v.a_slice(t - 1));
        EXPECT_EQ(pairs[k].b, v.a_slice(t + 1));
    }
    EXPECT_EQ(targets, (std::set<Index>{1, 3, 5, 7}));
    EXPECT_THROW(nvs_pairs_from_volume(EPIVolume(Tensor({2, 2, 2}), Orientation::Horizontal, 0)), ContractError);

    const auto flat = build_nvs_pairs({scene_patches(5, 0)[0]});
    EXPECT_EQ(flat.size(), 18u * 4u);
    for (const NvsPair& p : flat) {
        EXPECT_EQ(p.target, p.a);
        EXPECT_EQ(p.target, p.b);
    }
}

TEST(Train, ZeroEpochsKeepInitialization) {
    Rng rng(6);
    const EvrnWeights init = EvrnWeights::initialize(tiny_evrn(), rng);
    const TrainingPairSet set = build_evrn_pairs({scene_patches(1, 1)[0]}, options(SrMode::SSR));
    const TrainResult r = train_evrn(set, init, quick(0));
    EXPECT_EQ(r.params, init.params);
    EXPECT_TRUE(r.epoch_losses.empty());
}

TEST(Train, DecayFlagsAndDeterminism) {
    Rng rng(7);
    const EvrnWeights init = EvrnWeights::initialize(tiny_evrn(), rng);
    for (const ParamEntry& e : init.params.entries()) {
        EXPECT_EQ(e.weight_decay, e.name.ends_with(".w")) << e.name;
    }
    const TrainingPairSet set = build_evrn_pairs({scene_patches(1, 1)[0]}, options(SrMode::SSR));
    const TrainResult a = train_evrn(set, init, quick(2));
    const TrainResult b = train_evrn(set, init, quick(2));
    EXPECT_EQ(a.params, b.params);
    EXPECT_EQ(a.epoch_losses, b.epoch_losses);
    ASSERT_EQ(a.epoch_losses.size(), 2u);
    for (double l : a.step_losses) EXPECT_TRUE(std::isfinite(l));
    EXPECT_EQ(a.step_losses.size(), 10u);
}

TEST(Train, ResumeIsBitExact) {
    Rng rng(8);
    const EvrnWeights init = EvrnWeights::initialize(tiny_evrn(), rng);
    const TrainingPairSet set = build_evrn_pairs({scene_patches(1, 1)[0]}, options(SrMode::SSR));
    const TrainingObjective obj = evrn_objective(set, init.config);

    Trainer straight(ModelKind::Evrn, init.config.to_json(), init.params, quick(2), obj);
    straight.run();

    const auto dir = std::filesystem::temp_directory_path() / "lfsr_unit" / "ckpt";
    std::filesystem::create_directories(dir);
    Trainer first(ModelKind::Evrn, init.config.to_json(), init.params, quick(2), obj);
    first.run_epoch();
    first.save_checkpoint(dir / "c.lfvw");

    Trainer resumed(ModelKind::Evrn, init.config.to_json(), init.params, quick(2), obj);
    resumed.restore_checkpoint(dir / "c.lfvw");
    EXPECT_EQ(resumed.epoch(), 1);
    resumed.run();
    EXPECT_EQ(resumed.params(), straight.params());
    EXPECT_EQ(resumed.epoch_losses(), straight.epoch_losses());
    EXPECT_EQ(resumed.optimizer().moments.at("tail.w").second, straight.optimizer().moments.at("tail.w").second);

    Trainer other(ModelKind::Evrn, init.config.to_json(), init.params, quick(3), obj);
    EXPECT_THROW(other.restore_checkpoint(dir / "c.lfvw"), ContractError);
}

TEST(Train, NanLossAborts) {
    Rng rng(9);
    const NvsWeights init = NvsWeights::initialize({1, 4}, rng);
    std::vector<NvsPair> pairs(2, NvsPair{Tensor({6, 6}, 0.5f), Tensor({6, 6}, 0.5f), Tensor({6, 6}, 0.5f)});
    pairs[1].target[3] = NAN;
    TrainSchedule s = TrainSchedule::for_nvs();
    s.epochs = 1;
    EXPECT_THROW(train_nvs(pairs, init, s), TrainingDiverged);
}

TEST(Train, NvsLossFalls) {
    Rng rng(10);
    const NvsWeights init = NvsWeights::initialize({1, 8}, rng);
    const auto pairs = build_nvs_pairs({scene_patches(11, 2)[0]});
    TrainSchedule s = TrainSchedule::for_nvs();
    s.epochs = 3;
    s.initial_lr = 2e-3;
    s.batch_size = 8;
    const TrainingObjective obj = nvs_objective(pairs, init.config);
    const double before = evaluate(obj, init.params);
    const TrainResult r = train_nvs(pairs, init, s);
    EXPECT_LT(evaluate(obj, r.params), before);
}
