#include "oracles.hpp"

#include "lfsr/error.hpp"
#include "lfsr/ops.hpp"

#include <gtest/gtest.h>

#include <array>
#include <cmath>

using namespace lfsr;
using namespace lfsr::testing;

TEST(Tensor, ShapeAndAccess) {
    Tensor t({2, 3, 4});
    EXPECT_EQ(t.size(), 24);
    EXPECT_EQ(t.dim(-1), 4);
    t.at({1, 2, 3}) = 5.0f;
    EXPECT_EQ(t[23], 5.0f);
    EXPECT_THROW(t.at({2, 0, 0}), std::out_of_range);
    EXPECT_THROW((void)t.reshaped({5, 5}), ContractError);
    EXPECT_EQ(t.reshaped({24}).dim(0), 24);
}

TEST(Ops, Conv3dMatchesLoops) {
    Rng rng(11);
    for (int trial = 0; trial < 8; ++trial) {
        const Index k = trial % 2 == 0 ? 3 : 1;
        const Tensor in = random_tensor({5, 4, 6, 3}, rng);
        const Tensor w = random_tensor({k, k, k, 3, 5}, rng);
        const Tensor b = random_tensor({5}, rng);
        EXPECT_LT(max_rel_diff(ops::conv3d_same(in, w, b), naive_conv3d(in, w, b)), 1e-5);
    }
}

TEST(Ops, Conv2dMatchesLoops) {
    Rng rng(12);
    for (Index k : {1, 3, 5}) {
        const Tensor in = random_tensor({7, 6, 2}, rng);
        const Tensor w = random_tensor({k, k, 2, 3}, rng);
        const Tensor b = random_tensor({3}, rng);
        EXPECT_LT(max_rel_diff(ops::conv2d_same(in, w, b), naive_conv2d(in, w, b)), 1e-5);
    }
}

TEST(Ops, ConvRejectsChannelMismatch) {
    EXPECT_THROW(ops::conv3d_same(Tensor({2, 2, 2, 3}), Tensor({3, 3, 3, 2, 1}), Tensor({1})), ContractError);
}

TEST(Ops, PoolMatchesLoops) {
    Rng rng(13);
    const Tensor x = random_tensor({4, 3, 5, 2}, rng);
    for (auto mode : {ops::PoolMode::Avg, ops::PoolMode::Max}) {
        for (const std::vector<Index>& axes : {std::vector<Index>{1, 3}, {0, 2, 3}, {0, 1, 2}}) {
            EXPECT_LT(max_rel_diff(ops::pool_over_axes(x, axes, mode), naive_pool(x, axes, mode)), 1e-6);
        }
    }
}

TEST(Ops, DenseConcatBroadcast) {
    Rng rng(14);
    const Tensor x = random_tensor({6}, rng), w = random_tensor({6, 4}, rng), b = random_tensor({4}, rng);
    EXPECT_LT(max_rel_diff(ops::dense(x, w, b), naive_dense(x, w, b)), 1e-6);

    const Tensor p = random_tensor({2, 3, 2}, rng), q = random_tensor({2, 3, 5}, rng);
    const std::array parts{p, q};
    const Tensor joined = ops::concat(parts, 2);
    EXPECT_EQ(joined, naive_concat({p, q}, 2));
    const std::array<Index, 2> extents{2, 5};
    const auto back = ops::split(joined, extents, 2);
    EXPECT_EQ(back[0], p);
    EXPECT_EQ(back[1], q);

    const Tensor big = random_tensor({3, 4, 5, 2}, rng), s = random_tensor({1, 4, 1, 1}, rng);
    EXPECT_EQ(ops::broadcast_mul(big, s), naive_broadcast_mul(big, s));
    EXPECT_THROW(ops::broadcast_mul(big, Tensor({2, 4, 1, 1})), ContractError);
}

TEST(Ops, PreluAndSigmoid) {
    const Tensor x({2, 2}, std::vector<float>{-2.0f, 1.0f, 3.0f, -4.0f});
    const Tensor slope({2}, std::vector<float>{0.5f, 0.25f});
    const Tensor y = ops::prelu(x, slope);
    EXPECT_FLOAT_EQ(y[0], -1.0f);
    EXPECT_FLOAT_EQ(y[1], 1.0f);
    EXPECT_FLOAT_EQ(y[3], -1.0f);
    const Tensor s = ops::sigmoid(Tensor({3}, std::vector<float>{0.0f, 40.0f, -40.0f}));
    EXPECT_FLOAT_EQ(s[0], 0.5f);
    EXPECT_GT(s[1], 0.99f);
    EXPECT_GE(s[2], 0.0f);
}

TEST(Ops, L1AndPermute) {
    const Tensor a({4}, std::vector<float>{0, 1, 2, 3}), b({4}, std::vector<float>{1, 1, 1, 1});
    EXPECT_DOUBLE_EQ(ops::l1_loss(a, b), 1.0);
    Rng rng(15);
    const Tensor x = random_tensor({2, 3, 4}, rng);
    const std::array<Index, 3> perm{2, 0, 1};
    const Tensor p = ops::permute(x, perm);
    EXPECT_EQ(p.shape(), (Shape{4, 2, 3}));
    EXPECT_EQ(p.at({3, 1, 2}), x.at({1, 2, 3}));
}
