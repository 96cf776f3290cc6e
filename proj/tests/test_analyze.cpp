// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The TFD Authors

#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "test_helpers.hpp"
#include "tfd/analyze.hpp"
#include "tfd/degrade.hpp"
#include "tfd/ops.hpp"
#include "tfd/error.hpp"
#include "tfd/synth.hpp"

using namespace tfd;
using tfd::testing::random_tensor;

TEST(CosSim, ClosedForms) {
    auto v = [](double a, double b) { return Tensor(Shape{2}, std::vector<double>{a, b}); };
    EXPECT_NEAR(cosine_similarity(v(1, 2), v(1, 2)), 1.0, 1e-15);
    EXPECT_EQ(cosine_similarity(v(1, 0), v(0, 1)), 0.0);
    EXPECT_NEAR(cosine_similarity(v(1, 2), v(2, 1)), 0.8, 1e-15);
    EXPECT_EQ(cosine_similarity(v(0, 0), v(0, 0)), 1.0);
    Tensor a = random_tensor(Shape{3, 5}, 1), b = random_tensor(Shape{3, 5}, 2);
    EXPECT_NEAR(cosine_similarity(scale(a, 3.5), scale(b, 0.01)), cosine_similarity(a, b), 1e-12);
}

TEST(ResidualSpectrum, ZeroForIdenticalAndParseval) {
    Image8 a = synth_image(32, 32, 1, 3);
    for (const auto& bin : residual_spectrum(a, a, 8).bins) EXPECT_EQ(bin.mean_magnitude, 0.0);
    Image8 b = synth_image(32, 32, 1, 4);
    auto p = residual_spectrum(a, b, 8);
    double spectral = 0;
    for (const auto& bin : p.bins) spectral += bin.mean_power * static_cast<double>(bin.population);
    double spatial = 0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        const double d = (b.data[i] - a.data[i]) / 255.0;
        spatial += d * d;
    }
    EXPECT_NEAR(spectral / (32.0 * 32.0) / spatial, 1.0, 1e-6);
    EXPECT_THROW(residual_spectrum(a, Image8(16, 16, 1), 8), ShapeError);
}

TEST(FreqProbe, DcTargetHasOnlyLowRows) {
    FreqProbeConfig cfg;
    cfg.steps = 1500;
    cfg.log_every = 100;
    cfg.lr = 1e-2;
    cfg.hidden = 8;
    auto r = freq_principle_probe(Image8(16, 16, 1, 100), cfg);
    ASSERT_FALSE(r.rows.empty());
    for (const auto& row : r.rows) EXPECT_EQ(row.band, "low");
    EXPECT_LT(r.rows.back().rel_error, 1e-3);
}

TEST(FreqProbe, BandErrorsRecomputed) {
    Tensor t = random_tensor(Shape{1, 1, 16, 16}, 5, 0, 1);
    Tensor f = random_tensor(Shape{1, 1, 16, 16}, 6, 0, 1);
    Spectrum st = dft2(t), sf = dft2(f);
    auto be = band_errors(sf, st, 0.1, 0.3);
    double lo = 0, hi = 0;
    std::size_t nl = 0, nh = 0;
    for (int u = 0; u < 16; ++u)
        for (int v = 0; v < 16; ++v) {
            const std::size_t k = static_cast<std::size_t>(u) * 16 + v;
            const std::complex<double> H(st.re[k], st.im[k]), S(sf.re[k], sf.im[k]);
            if (std::abs(H) < 1e-6) continue;
            const double r = radial_frequency(u, v, 16, 16), e = std::abs(S - H) / std::abs(H);
            if (r <= 0.1) lo += e, ++nl;
            if (r >= 1.0 - 0.3) hi += e, ++nh;
        }
    EXPECT_EQ(be.low_count, nl);
    EXPECT_EQ(be.high_count, nh);
    EXPECT_NEAR(be.low, lo / nl, 1e-12);
    EXPECT_NEAR(be.high, hi / nh, 1e-12);
}

TEST(FreqProbe, DeterministicUnderSeed) {
    FreqProbeConfig cfg;
    cfg.steps = 50;
    cfg.seed = 3;
    Image8 img = standard_probe_image();
    std::ostringstream a, b;
    write_freq_csv(freq_principle_probe(img, cfg).rows, a);
    write_freq_csv(freq_principle_probe(img, cfg).rows, b);
    EXPECT_EQ(a.str(), b.str());
}

TEST(Snr, UniformParsevalIdenticalAndRamp) {
    Tensor c = random_tensor(Shape{1, 1, 16, 16}, 7);
    Tensor n = random_tensor(Shape{1, 1, 16, 16}, 8, -0.1, 0.1);
    SnrWeight uni{SnrWeightKind::uniform};
    double ec = 0, en = 0;
    for (std::size_t i = 0; i < c.numel(); ++i) ec += c[i] * c[i], en += n[i] * n[i];
    for (const auto& row : snr_curve(c, n, uni, 5)) EXPECT_NEAR(row.snr, ec / en, 1e-9 * ec / en);
    for (const auto& row : snr_curve(n, n, SnrWeight{}, 5)) EXPECT_NEAR(row.snr, 1.0, 1e-12);
    EXPECT_THROW(snr_curve(c, Tensor(Shape{1, 1, 16, 16}), uni, 3), ConfigError);

    auto ramp = snr_curve(synth_image(64, 64, 1, 9), 20.0, SnrWeight{}, 20, 1);
    for (std::size_t i = 1; i < ramp.size(); ++i) EXPECT_LT(ramp[i].snr, ramp[i - 1].snr);
}

TEST(Similarity, CleanVersusCleanAtStepZero) {
    ArchConfig a;
    a.in_channels = 1;
    a.channels = 4;
    a.blocks = 2;
    a.insert_at = 1;
    a.feature_size = 8;
    TfdModel m(a, 1);
    std::vector<Image8> probe = {synth_image(32, 32, 1, 1), synth_image(32, 32, 1, 2)};
    std::vector<std::string> presets = {"clean", "noise"};
    auto rows = measure_similarity(m, probe, presets, 5);
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_NEAR(rows[0].cossim, 1.0, 1e-12);
    EXPECT_LE(rows[1].cossim, 1.0);
    EXPECT_GE(rows[1].cossim, -1.0);
    std::ostringstream x, y;
    write_similarity_csv(rows, x);
    write_similarity_csv(measure_similarity(m, probe, presets, 5), y);
    EXPECT_EQ(x.str(), y.str());
}
