#include "oracles.hpp"

#include "lfsr/error.hpp"
#include "lfsr/parallel.hpp"
#include "lfsr/pipeline.hpp"
#include "lfsr/synthetic.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace lfsr;
using namespace lfsr::testing;

namespace {

SrTask ssr_task() {
    SrTask t;
    t.mode = SrMode::SSR;
    t.spatial_factor = 2;
    return t;
}

SrTask asr_task() {
    SrTask t;
    t.mode = SrMode::ASR;
    t.spatial_factor = 1;
    t.angular = true;
    return t;
}

EvrnWeights random_evrn(int angular, Rng& rng) {
    EvrnConfig c;
    c.residual_blocks = 1;
    c.channels = 4;
    c.reduction = 2;
    c.angular = angular;
    return EvrnWeights::initialize(c, rng);
}

} // namespace

TEST(Vsr, IdentityAndShapes) {
    Rng rng(1);
    const LightField4D lf = random_lightfield(6, 7, 5, 5, 1, rng);
    const VolumeSrFn id = [](const EPIVolume& v) { return v; };
    EXPECT_EQ(vsr(lf, AngularAxis::Tau, id), lf);
    EXPECT_EQ(vsr(lf, AngularAxis::Rho, id), lf);
    const LightField4D up = vsr(lf, AngularAxis::Tau, [](const EPIVolume& v) { return pasr_volume(v, PasrMethod::Mean); });
    EXPECT_EQ(up.angular_rho(), 9);
    EXPECT_EQ(up.angular_tau(), 5);
}

TEST(Vsr, PssrMatchesPerSaiResize) {
    Rng rng(2);
    const LightField4D lf = random_lightfield(5, 6, 3, 3, 1, rng);
    const LightField4D up = vsr(lf, AngularAxis::Rho, [](const EPIVolume& v) { return pssr_volume(v, 2); });
    for (Index r = 0; r < 3; ++r)
        for (Index t = 0; t < 3; ++t) EXPECT_EQ(extract_sai(up, {r, t}), bicubic_resize(extract_sai(lf, {r, t}), 10, 12));
}

TEST(Vsr, InconsistentOutputsRejected) {
    Rng rng(3);
    const LightField4D lf = random_lightfield(4, 4, 3, 3, 1, rng);
    EXPECT_THROW(vsr(lf, AngularAxis::Tau,
                     [](const EPIVolume& v) { return v.fixed_index() == 1 ? pssr_volume(v, 2) : v; }),
                 ContractError);
}

TEST(SuperResolve, ShapesPerMode) {
    Rng rng(4);
    const LightField4D lf9 = random_lightfield(8, 8, 9, 9, 1, rng);
    const LightField4D ssr = super_resolve(lf9, ssr_task());
    EXPECT_EQ(ssr.data().shape(), (Shape{16, 16, 9, 9, 1}));

    const LightField4D lf5 = random_lightfield(8, 8, 5, 5, 1, rng);
    EXPECT_EQ(super_resolve(lf5, asr_task()).data().shape(), (Shape{8, 8, 9, 9, 1}));
    SrTask assr = asr_task();
    assr.mode = SrMode::ASSR;
    assr.spatial_factor = 2;
    EXPECT_EQ(super_resolve(lf5, assr).data().shape(), (Shape{16, 16, 9, 9, 1}));

    SrTask bad = ssr_task();
    bad.angular = true;
    EXPECT_THROW(super_resolve(lf9, bad), ContractError);
    SrTask bad_asr = asr_task();
    bad_asr.spatial_factor = 2;
    EXPECT_THROW(super_resolve(lf5, bad_asr), ContractError);
}

TEST(SuperResolve, AsrKeepsInputViewsBeforeRefinement) {
    Rng rng(5);
    const LightField4D lf = random_lightfield(6, 7, 5, 5, 1, rng);
    const LightField4D out = super_resolve_channel(lf, asr_task());
    for (Index r = 0; r < 5; ++r)
        for (Index t = 0; t < 5; ++t) EXPECT_EQ(extract_sai(out, {2 * r, 2 * t}), extract_sai(lf, {r, t}));
}

TEST(SuperResolve, ZeroEvrnReducesToStageOne) {
    Rng rng(6);
    const LightField4D lf9 = random_lightfield(6, 6, 9, 9, 1, rng);
    EvrnConfig c;
    c.residual_blocks = 1;
    c.channels = 4;
    c.reduction = 2;
    const EvrnWeights zero = EvrnWeights::zeros(c);
    SrTask t = ssr_task();
    const LightField4D stage1 = super_resolve(lf9, t);
    t.evrn = &zero;
    EXPECT_EQ(super_resolve(lf9, t), stage1);

    const LightField4D lf5 = random_lightfield(6, 6, 5, 5, 1, rng);
    SrTask a = asr_task();
    const LightField4D asr1 = super_resolve(lf5, a);
    a.evrn = &zero;
    EXPECT_EQ(super_resolve(lf5, a), asr1);
}

TEST(SuperResolve, SsrBranchesAreTransposeSymmetric) {
    Rng rng(7);
    const LightField4D base = random_lightfield(8, 8, 9, 9, 1, rng);
    LightField4D sym = base;
    for (Index y = 0; y < 8; ++y)
        for (Index x = 0; x < 8; ++x)
            for (Index r = 0; r < 9; ++r)
                for (Index t = 0; t < 9; ++t) sym(y, x, r, t) = 0.5f * (base(y, x, r, t) + base(x, y, t, r));
    const EvrnWeights w = random_evrn(9, rng);
    SrTask task = ssr_task();
    task.evrn = &w;
    const LightField4D out = super_resolve(sym, task);
    double worst = 0.0;
    for (Index y = 0; y < 16; ++y)
        for (Index x = 0; x < 16; ++x)
            for (Index r = 0; r < 9; ++r)
                for (Index t = 0; t < 9; ++t) worst = std::max(worst, static_cast<double>(std::abs(out(y, x, r, t) - out(x, y, t, r))));
    EXPECT_LT(worst, 1e-5);
}

TEST(SuperResolve, DeterministicAcrossThreadCounts) {
    Rng rng(8);
    const LightField4D lf = random_lightfield(6, 6, 5, 5, 1, rng);
    const EvrnWeights w = random_evrn(9, rng);
    SrTask task = asr_task();
    task.evrn = &w;
    set_thread_count(1);
    const LightField4D a = super_resolve(lf, task);
    set_thread_count(3);
    const LightField4D b = super_resolve(lf, task);
    set_thread_count(1);
    EXPECT_EQ(a, b);
    EXPECT_TRUE(a.in_unit_range());
}

TEST(SuperResolve, ColorAndExternalPssr) {
    const LightField4D rgb = generate_synthetic({3, 1, 20, 20, 9, 3, 1.5});
    int events = 0;
    const LightField4D out = super_resolve(rgb, ssr_task(), [&](const nlohmann::json& j) {
        EXPECT_EQ(j["event"], "volume");
        ++events;
    });
    EXPECT_EQ(out.color_space(), ColorSpace::RGB);
    EXPECT_EQ(out.height(), 40);
    EXPECT_EQ(events, 3 * 18);
    EXPECT_TRUE(out.in_unit_range());

    // An external up-sampler that happens to be bicubic must reproduce the built-in path.
    const LightField4D y = luma(generate_synthetic({4, 1, 20, 20, 9, 1, 1.5}));
    const LightField4D ext = vsr(y, AngularAxis::Tau, [](const EPIVolume& v) { return pssr_volume(v, 2); });
    SrTask task = ssr_task();
    task.pssr = PssrMethod::External;
    task.external_spatial = &ext;
    EXPECT_EQ(super_resolve(y, task), super_resolve(y, ssr_task()));
}
