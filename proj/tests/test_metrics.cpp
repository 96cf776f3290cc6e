// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The TFD Authors

#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "tfd/degrade.hpp"
#include "tfd/error.hpp"
#include "tfd/metrics.hpp"
#include "tfd/synth.hpp"

using namespace tfd;

TEST(Psnr, ClosedForms) {
    Image8 a = synth_image(16, 16, 3, 1);
    EXPECT_EQ(psnr(a, a), kPsnrCap);
    Image8 z(8, 8, 1, 0), s(8, 8, 1, 16), f(8, 8, 1, 255);
    EXPECT_NEAR(psnr(z, s), 10 * std::log10(65025.0 / 256.0), 1e-12);
    EXPECT_NEAR(psnr(z, s), 24.0484, 1e-4);
    EXPECT_NEAR(psnr(z, f), 0.0, 1e-12);
    EXPECT_THROW(psnr(z, Image8(4, 8, 1)), ShapeError);
}

TEST(Ssim, IdentitySymmetryInversion) {
    Image8 a = synth_image(48, 48, 1, 2);
    EXPECT_EQ(ssim(a, a), 1.0);
    Image8 inv = a;
    for (auto& v : inv.data) v = static_cast<std::uint8_t>(255 - v);
    EXPECT_LT(ssim(a, inv), 0.2);
    Image8 b = synth_image(48, 48, 1, 3);
    EXPECT_NEAR(ssim(a, b), ssim(b, a), 1e-12);
    EXPECT_THROW(ssim(Image8(10, 10, 1), Image8(10, 10, 1)), ShapeError);
}

TEST(Luma, Bt601) {
    Image8 px(1, 1, 3);
    px.data = {255, 0, 0};
    EXPECT_EQ(to_luma(px).data[0], 76);
    Image8 g(2, 2, 1, 9);
    EXPECT_EQ(to_luma(g), g);
}

TEST(Evaluate, BicubicIdentityMatchesIndependentPipeline) {
    std::vector<Image8> hr = {synth_image(70, 66, 3, 4), synth_image(64, 64, 3, 5)};
    std::vector<std::string> names = {"a", "b"};
    std::vector<std::string> presets = {"clean", "noise"};
    EvalOptions opt;
    opt.seed = 9;
    auto up = [](const Tensor& lr) { return bicubic_up(lr, 4); };
    MetricReport rep = evaluate(up, hr, names, presets, opt);
    ASSERT_EQ(rep.rows.size(), 4u);
    EXPECT_EQ(rep.averages().size(), 3u);

    Image8 c = crop(hr[0], 0, 0, 64, 64);
    Image8 ref = from_tensor(bicubic_up(to_tensor(from_tensor(bicubic_down(to_tensor(c), 4))), 4));
    EXPECT_NEAR(rep.rows[0].psnr, psnr(ref, c), 1e-12);

    std::ostringstream a, b;
    write_report_csv(rep, a);
    write_report_csv(evaluate(up, hr, names, presets, opt), b);
    EXPECT_EQ(a.str(), b.str());
    EXPECT_EQ(a.str().rfind("preset,image,psnr,ssim\n", 0), 0u);
}
