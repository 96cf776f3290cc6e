// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The TFD Authors

#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <vector>

#include "tfd/rng.hpp"
#include "tfd/tensor.hpp"

namespace tfd::testing {

inline Tensor random_tensor(Shape shape, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
    Rng rng(seed);
    std::vector<double> v(shape.numel());
    for (double& x : v) x = rng.uniform(lo, hi);
    return Tensor(std::move(shape), std::move(v));
}

/// Textbook O(N^4) DFT of one H x W real plane.
inline std::vector<std::complex<double>> naive_dft(const double* x, int H, int W) {
    const double pi = std::acos(-1.0);
    std::vector<std::complex<double>> out(static_cast<std::size_t>(H) * W);
    for (int u = 0; u < H; ++u)
        for (int v = 0; v < W; ++v) {
            std::complex<double> acc = 0.0;
            for (int y = 0; y < H; ++y)
                for (int xx = 0; xx < W; ++xx) {
                    const double a = -2.0 * pi * (static_cast<double>(u) * y / H + static_cast<double>(v) * xx / W);
                    acc += x[y * W + xx] * std::complex<double>(std::cos(a), std::sin(a));
                }
            out[static_cast<std::size_t>(u) * W + v] = acc;
        }
    return out;
}

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.numel(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace tfd::testing
