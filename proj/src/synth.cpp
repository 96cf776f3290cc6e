// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The TFD Authors

#include "tfd/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "tfd/error.hpp"
#include "tfd/rng.hpp"

namespace tfd {

Image8 synth_image(int width, int height, int channels, std::uint64_t seed) {
    if (width < 1 || height < 1) throw ConfigError("synth: image extents must be positive");
    if (channels != 1 && channels != 3) throw ConfigError("synth: channels must be 1 or 3");
    Rng rng(seed);
    const std::size_t HW = static_cast<std::size_t>(width) * height;
    std::vector<double> lum(HW), tint(HW * 3, 0.0);
    const double pi = std::numbers::pi;

    // Smooth shading from a few low-frequency waves.
    const double base = rng.uniform(0.3, 0.7);
    struct Wave { double fx, fy, phase, amp; };
    std::vector<Wave> waves;
    for (int i = 0; i < 3; ++i)
        waves.push_back({rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5), rng.uniform(0.0, 2 * pi), rng.uniform(0.05, 0.15)});
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
            const double u = static_cast<double>(x) / width, v = static_cast<double>(y) / height;
            double s = base;
            for (const auto& w : waves) s += w.amp * std::sin(2 * pi * (w.fx * u + w.fy * v) + w.phase);
            lum[static_cast<std::size_t>(y) * width + x] = s;
        }

    // Flat shapes with soft edges, some carrying a stripe texture.
    const int shapes = 3 + static_cast<int>(rng.below(4));
    for (int i = 0; i < shapes; ++i) {
        const double cx = rng.uniform(0.0, width), cy = rng.uniform(0.0, height);
        const double rx = rng.uniform(0.08, 0.3) * width, ry = rng.uniform(0.08, 0.3) * height;
        const bool ellipse = rng.uniform() < 0.5;
        const double value = rng.uniform(0.05, 0.95);
        const double soft = rng.uniform(1.5, 4.0);
        const bool striped = rng.uniform() < 0.4;
        const double period = rng.uniform(12.0, 32.0), angle = rng.uniform(0.0, pi), amp = rng.uniform(0.05, 0.2);
        const double hue[3] = {rng.uniform(-0.15, 0.15), rng.uniform(-0.15, 0.15), rng.uniform(-0.15, 0.15)};
        const double rmin = std::min(rx, ry);
        for (int y = 0; y < height; ++y)
            for (int x = 0; x < width; ++x) {
                const double dx = (x + 0.5 - cx) / rx, dy = (y + 0.5 - cy) / ry;
                // Approximate signed distance to the outline, in pixels.
                const double dist = ellipse ? (std::sqrt(dx * dx + dy * dy) - 1.0) * rmin
                                            : std::max((std::fabs(dx) - 1.0) * rx, (std::fabs(dy) - 1.0) * ry);
                const double cover = std::clamp(0.5 - dist / soft, 0.0, 1.0);
                if (cover == 0.0) continue;
                const std::size_t idx = static_cast<std::size_t>(y) * width + x;
                double s = value;
                if (striped) s += amp * std::sin(2 * pi * (x * std::cos(angle) + y * std::sin(angle)) / period);
                lum[idx] = (1.0 - cover) * lum[idx] + cover * s;
                for (int c = 0; c < 3; ++c) tint[idx * 3 + c] = (1.0 - cover) * tint[idx * 3 + c] + cover * hue[c];
            }
    }

    Image8 img(width, height, channels);
    for (std::size_t i = 0; i < HW; ++i)
        for (int c = 0; c < channels; ++c) {
            const double v = channels == 1 ? lum[i] : lum[i] + tint[i * 3 + c];
            img.data[i * channels + c] = static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
        }
    return img;
}

}  // namespace tfd
