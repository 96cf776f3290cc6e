// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The TFD Authors

#include <cmath>

#include <gtest/gtest.h>

#include "test_helpers.hpp"
#include "tfd/degrade.hpp"
#include "tfd/error.hpp"
#include "tfd/metrics.hpp"
#include "tfd/synth.hpp"

using namespace tfd;

TEST(Blur, KernelAndImpulse) {
    auto g = gaussian_kernel1d(1.0, 5);
    const double ref[5] = {0.05448868, 0.24420134, 0.40261995, 0.24420134, 0.05448868};
    for (int i = 0; i < 5; ++i) EXPECT_NEAR(g[i], ref[i], 1e-8);
    EXPECT_EQ(default_blur_ksize(2.0), 13);

    Tensor imp(Shape{1, 1, 9, 9});
    imp.mutable_data()[4 * 9 + 4] = 1;
    Tensor out = gaussian_blur(imp, 1.0, 5);
    EXPECT_NEAR(out.at(0, 0, 4, 4), 0.16210282, 1e-6);
    double mass = 0;
    for (double v : out.data()) mass += v;
    EXPECT_NEAR(mass, 1.0, 1e-12);
}

TEST(Blur, ConstantPreserved) {
    Tensor c = gaussian_blur(Tensor(Shape{1, 3, 10, 7}, 0.3), 2.0, default_blur_ksize(2.0));
    for (double v : c.data()) EXPECT_NEAR(v, 0.3, 1e-12);
}

TEST(Bicubic, ConstantRampAndShape) {
    Tensor c = bicubic_down(Tensor(Shape{1, 1, 64, 64}, 0.7), 4);
    EXPECT_EQ(c.h(), 16);
    EXPECT_EQ(c.w(), 16);
    for (double v : c.data()) EXPECT_NEAR(v, 0.7, 1e-12);

    Tensor ramp(Shape{1, 1, 8, 32});
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 32; ++x) ramp.mutable_data()[y * 32 + x] = 0.01 * x;
    Tensor d = bicubic_down(ramp, 4);
    for (int x = 1; x < 7; ++x) {
        EXPECT_NEAR(d.at(0, 0, 1, x), 0.01 * ((x + 0.5) * 4 - 0.5), 1e-12);
        EXPECT_NEAR(d.at(0, 0, 1, x + 1) - d.at(0, 0, 1, x), 0.04, 1e-12);
    }
    EXPECT_THROW(bicubic_down(Tensor(Shape{1, 1, 10, 8}), 4), Error);
}

TEST(Noise, StatisticsAndClamp) {
    Rng rng(1);
    Tensor zero = add_gaussian_noise(Tensor(Shape{1, 1, 4, 4}, 0.5), 0.0, rng);
    for (double v : zero.data()) EXPECT_EQ(v, 0.5);

    Tensor in(Shape{1, 1, 250, 400}, 0.5);
    Tensor out = add_gaussian_noise(in, 20.0, rng);
    double m = 0, s = 0;
    for (std::size_t i = 0; i < out.numel(); ++i) m += out[i] - 0.5;
    m /= out.numel();
    for (std::size_t i = 0; i < out.numel(); ++i) s += (out[i] - 0.5 - m) * (out[i] - 0.5 - m);
    const double sd = std::sqrt(s / out.numel());
    EXPECT_GE(sd, 19.0 / 255 * 0.97);
    EXPECT_LE(sd, 21.0 / 255 * 1.03);

    Tensor top = add_gaussian_noise(Tensor(Shape{1, 1, 50, 50}, 1.0), 20.0, rng);
    for (double v : top.data()) EXPECT_LE(v, 1.0);
}

TEST(Jpeg, QuantTableAndConstantBlock) {
    // scale = q < 50 ? 5000 / q : 200 - 2 q; Q' = clamp((Q scale + 50) / 100, 1, 255)
    EXPECT_EQ(jpeg_quant_table(30)[0], 27);
    EXPECT_EQ(jpeg_quant_table(70)[0], 10);
    EXPECT_EQ(jpeg_quant_table(50)[0], 16);
    EXPECT_EQ(jpeg_quant_table(100)[0], 1);
    EXPECT_EQ(jpeg_quant_table(1)[63], 255);
    for (int q : {90, 30, 10}) {
        Tensor c(Shape{1, 1, 16, 16}, 128.0 / 255);
        Tensor r = jpeg_codec(c, q);
        for (double v : r.data()) EXPECT_EQ(std::lround(v * 255), 128);
    }
}

TEST(Jpeg, PsnrMonotoneInQuality) {
    Image8 img = synth_image(64, 64, 1, 3);
    double prev = 1e9;
    for (int q : {90, 60, 30, 10}) {
        const double p = psnr(img, from_tensor(jpeg_codec(to_tensor(img), q)));
        EXPECT_LT(p, prev) << q;
        prev = p;
    }
}

TEST(Presets, NamesStagesAndErrors) {
    EXPECT_EQ(preset_names().size(), 8u);
    EXPECT_THROW(DegradationConfig::preset("bogus"), ConfigError);
    try {
        DegradationConfig::preset("bogus");
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("blur+noise+jpeg"), std::string::npos);
    }
    Image8 hr = synth_image(32, 32, 3, 4);
    Rng rng(5);
    auto all = apply(DegradationConfig::preset("blur+noise+jpeg"), hr, rng);
    ASSERT_EQ(all.trace.size(), 4u);
    EXPECT_EQ(all.trace[0], "blur");
    EXPECT_EQ(all.trace[1], "downsample");
    EXPECT_EQ(all.trace[2], "noise");
    EXPECT_EQ(all.trace[3], "jpeg");
    EXPECT_EQ(all.label, 1);

    auto clean = apply(DegradationConfig::preset("clean"), hr, rng);
    ASSERT_EQ(clean.trace.size(), 1u);
    EXPECT_EQ(clean.label, 0);
    EXPECT_EQ(clean.lr, from_tensor(bicubic_down(to_tensor(hr), 4)));
    EXPECT_EQ(apply(DegradationConfig::preset("blur+jpeg"), hr, rng).label, 0);
}

TEST(Presets, SeedReplay) {
    Image8 hr = synth_image(48, 48, 3, 6);
    for (const auto& name : preset_names()) {
        Rng a(77), b(77);
        EXPECT_EQ(apply(DegradationConfig::preset(name), hr, a).lr, apply(DegradationConfig::preset(name), hr, b).lr)
            << name;
    }
}

TEST(Rng, DeterministicStreams) {
    Rng a(42), b(42), c(43);
    for (int i = 0; i < 10; ++i) EXPECT_EQ(a.next_u64(), b.next_u64());
    EXPECT_NE(Rng(42).next_u64(), c.next_u64());
    EXPECT_NE(derive_seed(1, 0), derive_seed(1, 1));
    Rng u(3);
    for (int i = 0; i < 1000; ++i) {
        const double v = u.uniform();
        EXPECT_GE(v, 0.0);
        EXPECT_LT(v, 1.0);
    }
}
