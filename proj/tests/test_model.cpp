// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The TFD Authors

#include <cmath>

#include <gtest/gtest.h>

#include "test_helpers.hpp"
#include "tfd/error.hpp"
#include "tfd/model.hpp"

using namespace tfd;
using tfd::testing::random_tensor;

namespace {

ArchConfig small_arch() {
    ArchConfig a;
    a.in_channels = 1;
    a.channels = 8;
    a.blocks = 2;
    a.insert_at = 1;
    a.scale = 2;
    a.feature_size = 8;
    return a;
}

void set_confidence(TfdModel& m, double p) {
    for (double& v : m.params().get("tfd.det.fc2.w").value.mutable_data()) v = 0.0;
    auto b = m.params().get("tfd.det.fc2.b").value.mutable_data();
    b[0] = 0.0;
    b[1] = std::log(p / (1.0 - p));
}

}  // namespace

TEST(Model, ParamBudgetMatchesStore) {
    for (bool nd : {false, true})
        for (bool sd : {false, true})
            for (bool fd : {false, true})
                for (auto fusion : {Fusion::multiplication, Fusion::addition, Fusion::concatenation}) {
                    ArchConfig a;
                    a.nd = nd;
                    a.sd = sd;
                    a.fd = fd;
                    a.fusion = fusion;
                    TfdModel m(a, 1);
                    auto b = param_budget(a);
                    EXPECT_EQ(b.backbone, m.backbone_param_count());
                    EXPECT_EQ(b.addon, m.addon_param_count());
                    if (!nd && !sd && !fd) {
                        EXPECT_EQ(m.addon_param_count(), 0u);
                    }
                }
}

TEST(Model, DefaultAddonWithinBudget) {
    auto b = param_budget(ArchConfig{});
    EXPECT_GT(b.addon, 0u);
    EXPECT_LE(static_cast<double>(b.addon), 0.15 * static_cast<double>(b.backbone));
}

TEST(Model, ShapesAndDeterministicInit) {
    ArchConfig a = small_arch();
    TfdModel m1(a, 3), m2(a, 3);
    Tensor lr = random_tensor(Shape{2, 1, 8, 8}, 1, 0, 1);
    auto r1 = m1.forward(lr, true);
    auto r2 = m2.forward(lr, true);
    EXPECT_EQ(r1.sr.shape(), (Shape{2, 1, 16, 16}));
    EXPECT_EQ(r1.h_n.shape(), (Shape{2, 8, 8, 8}));
    EXPECT_EQ(r1.logits.shape(), (Shape{2, 2}));
    EXPECT_EQ(tfd::testing::max_abs_diff(r1.sr, r2.sr), 0.0);
    EXPECT_THROW(m1.detect(random_tensor(Shape{1, 8, 6, 6}, 2)), ShapeError);
    EXPECT_THROW(parse_fusion("bogus"), ConfigError);
}

TEST(Model, DenoiserPreservesShape) {
    for (int C : {8, 16})
        for (int H : {8, 16}) {
            ArchConfig a = small_arch();
            a.channels = C;
            TfdModel m(a, 4);
            Tensor h = random_tensor(Shape{2, C, H, H}, 5);
            EXPECT_EQ(m.denoise(h).shape(), h.shape());
        }
}

TEST(Model, FrequencyMaskSaturation) {
    ArchConfig a = small_arch();
    a.sd = false;
    TfdModel m(a, 6);
    Tensor h = random_tensor(Shape{1, 8, 8, 8}, 7, 0.1, 1.0);
    // mask = sigmoid(idft2(W . F(h)) + offset); a huge offset saturates it at 1
    a.mask_offset = 60.0;
    TfdModel open(a, 6);
    EXPECT_LT(tfd::testing::max_abs_diff(open.denoise(h), h), 1e-6);
    a.mask_offset = -60.0;
    TfdModel shut(a, 6);
    for (double v : shut.denoise(h).data()) EXPECT_LT(std::abs(v), 1e-6);
}

TEST(Model, GateStrictlyAboveThreshold) {
    ArchConfig a = small_arch();
    TfdModel m(a, 8);
    Tensor lr = random_tensor(Shape{1, 1, 8, 8}, 9, 0, 1);
    set_confidence(m, 0.80);
    auto on = m.forward(lr, true);
    EXPECT_NEAR(on.confidence[0], 0.80, 1e-12);
    EXPECT_EQ(on.denoised.size(), 1u);
    EXPECT_EQ(m.forward(lr, false).denoised.size(), 0u);
    set_confidence(m, 0.75);
    auto edge = m.forward(lr, true);
    EXPECT_LE(edge.confidence[0], 0.75);
    EXPECT_EQ(edge.denoised.size(), 0u);
    EXPECT_EQ(tfd::testing::max_abs_diff(edge.h_routed, edge.h_n), 0.0);
}

TEST(Model, AllOffEqualsBackbone) {
    ArchConfig full = small_arch();
    ArchConfig off = full;
    off.nd = off.sd = off.fd = false;
    TfdModel mf(full, 10), mo(off, 10);
    Tensor lr = random_tensor(Shape{2, 1, 8, 8}, 11, 0, 1);
    auto a = mo.forward(lr, true);
    auto b = mf.forward(lr, false);
    EXPECT_EQ(tfd::testing::max_abs_diff(a.sr, b.sr), 0.0);
    EXPECT_EQ(a.logits.numel(), 0u);
    EXPECT_EQ(tfd::testing::max_abs_diff(mo.features(lr), a.h_n), 0.0);
}

TEST(Model, ConfigValidation) {
    ArchConfig a;
    a.insert_at = 9;
    EXPECT_THROW(a.validate(), ConfigError);
    a = ArchConfig{};
    a.scale = 3;
    EXPECT_THROW(a.validate(), ConfigError);
    a = ArchConfig{};
    a.reduction_ratio = 5;
    EXPECT_THROW(a.validate(), ConfigError);
}
