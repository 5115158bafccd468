#include "oracles.hpp"

#include "lfsr/error.hpp"
#include "lfsr/metrics.hpp"
#include "lfsr/synthetic.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace lfsr;
using namespace lfsr::testing;

namespace {

// SSIM evaluated window by window straight from the definition.
double ssim_oracle(const Tensor& a, const Tensor& b) {
    const Index h = a.dim(0), w = a.dim(1);
    double g[11][11], total = 0.0;
    for (int i = 0; i < 11; ++i)
        for (int j = 0; j < 11; ++j) total += g[i][j] = std::exp(-((i - 5) * (i - 5) + (j - 5) * (j - 5)) / (2 * 1.5 * 1.5));
    double sum = 0.0;
    Index count = 0;
    for (Index y = 0; y + 11 <= h; ++y)
        for (Index x = 0; x + 11 <= w; ++x) {
            double ma = 0, mb = 0;
            for (int i = 0; i < 11; ++i)
                for (int j = 0; j < 11; ++j) {
                    ma += g[i][j] / total * a.at({y + i, x + j});
                    mb += g[i][j] / total * b.at({y + i, x + j});
                }
            double va = 0, vb = 0, cov = 0;
            for (int i = 0; i < 11; ++i)
                for (int j = 0; j < 11; ++j) {
                    const double da = a.at({y + i, x + j}) - ma, db = b.at({y + i, x + j}) - mb;
                    va += g[i][j] / total * da * da;
                    vb += g[i][j] / total * db * db;
                    cov += g[i][j] / total * da * db;
                }
            const double c1 = 1e-4, c2 = 9e-4;
            sum += (2 * ma * mb + c1) * (2 * cov + c2) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
            ++count;
        }
    return sum / static_cast<double>(count);
}

} // namespace

TEST(Psnr, ClosedFormsAndOracle) {
    Rng rng(1);
    const Tensor a = random_tensor({8, 8}, rng, 0.0f, 0.9f);
    EXPECT_TRUE(std::isinf(psnr(a, a)));
    Tensor b = a;
    for (float& v : b.values()) v += 1.0f / 255.0f;
    EXPECT_NEAR(psnr(a, b), 20.0 * std::log10(255.0), 1e-4);
    const Tensor c = random_tensor({8, 8}, rng, 0.0f, 1.0f);
    double se = 0.0;
    for (Index i = 0; i < 64; ++i) se += std::pow(static_cast<double>(a[i]) - c[i], 2);
    EXPECT_NEAR(psnr(a, c), 10.0 * std::log10(64.0 / se), 1e-9);
    EXPECT_DOUBLE_EQ(psnr(a, c), psnr(c, a));
    EXPECT_THROW(psnr(a, Tensor({4, 4})), ContractError);
}

TEST(Psnr, DecreasesWithNoiseAmplitude) {
    Rng rng(2);
    const Tensor a = random_tensor({16, 16}, rng, 0.0f, 1.0f), n = random_tensor({16, 16}, rng);
    double last = INFINITY;
    for (float amp : {0.001f, 0.01f, 0.05f, 0.2f}) {
        Tensor b = a;
        for (Index i = 0; i < b.size(); ++i) b[i] += amp * n[i];
        const double p = psnr(a, b);
        EXPECT_LT(p, last);
        last = p;
    }
}

TEST(Ssim, MatchesLoopOracle) {
    Rng rng(3);
    const Tensor a = random_tensor({14, 17}, rng, 0.0f, 1.0f), b = random_tensor({14, 17}, rng, 0.0f, 1.0f);
    EXPECT_NEAR(ssim(a, b), ssim_oracle(a, b), 1e-9);
    EXPECT_EQ(ssim(a, a), 1.0);
    Tensor inv = a;
    for (float& v : inv.values()) v = 1.0f - v;
    EXPECT_LT(ssim(a, inv), 1.0);
    EXPECT_THROW(ssim(Tensor({10, 20}), Tensor({10, 20})), ContractError);
}

TEST(Protocols, MaskSizes) {
    std::size_t n = 0;
    for (bool b : ssr_mask(9, 9)) n += b;
    EXPECT_EQ(n, 49u);
    const auto m = asr_mask(9, 9);
    n = 0;
    for (bool b : m) n += b;
    EXPECT_EQ(n, 56u);
    for (Index r = 0; r < 9; r += 2)
        for (Index t = 0; t < 9; t += 2) EXPECT_FALSE(m[static_cast<std::size_t>(r * 9 + t)]);
}

TEST(Protocols, ReportsOnLightFields) {
    const LightField4D gt = generate_synthetic({1, 1, 20, 20, 9, 1, 1.5});
    const MetricReport same = eval_ssr(gt, gt);
    EXPECT_TRUE(std::isinf(same.mean_psnr));
    EXPECT_EQ(same.mean_ssim, 1.0);
    EXPECT_EQ(same.masked_count(), 49u);

    LightField4D pred = gt;
    for (Index i = 0; i < pred.data().size(); i += 7) pred.data()[i] = std::min(1.0f, pred.data()[i] + 0.05f);
    const MetricReport r = eval_asr(pred, gt);
    EXPECT_EQ(r.masked_count(), 56u);
    double sum = 0.0;
    for (std::size_t i = 0; i < r.mask.size(); ++i) {
        if (!r.mask[i]) {
            EXPECT_TRUE(std::isnan(r.psnr[i]));
            continue;
        }
        const ViewIndex v{static_cast<Index>(i) / 9, static_cast<Index>(i) % 9};
        EXPECT_DOUBLE_EQ(r.psnr[i], psnr(extract_sai(pred, v), extract_sai(gt, v)));
        EXPECT_DOUBLE_EQ(r.ssim[i], ssim(extract_sai(pred, v), extract_sai(gt, v)));
        sum += r.psnr[i];
    }
    EXPECT_NEAR(r.mean_psnr, sum / 56.0, 1e-9);

    const nlohmann::json j = r.to_json();
    EXPECT_EQ(j["protocol"], "asr-novel-56");
    EXPECT_EQ(j["grid"]["psnr"][0][0], nullptr);
    EXPECT_EQ(same.to_json()["means"]["psnr"], "inf");
    EXPECT_NE(r.csv_row("x").find("asr-novel-56"), std::string::npos);
    EXPECT_THROW(eval_ssr(pred, crop_central_views(gt, 7)), ContractError);
}
