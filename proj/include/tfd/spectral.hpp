// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The TFD Authors

#pragma once

#include <complex>
#include <span>
#include <vector>

#include "tfd/tensor.hpp"

namespace tfd {

/// Real and imaginary planes of a per-channel 2D DFT, DC at index (0, 0).
struct Spectrum {
    Tensor re;
    Tensor im;
};

/// Unnormalized forward 2D DFT over the last two axes of an N x C x H x W
/// tensor. Radix-2 when both extents are powers of two, direct DFT otherwise.
Spectrum dft2(const Tensor& x);

/// Inverse of dft2 including the 1/(HW) factor; returns the real part.
Tensor idft2(const Spectrum& s);

/// Elementwise modulus of the complex inverse transform (with 1/(HW)). Unlike
/// idft2 it keeps the imaginary part, which matters once the spectrum is no
/// longer conjugate symmetric. Gradient at a zero modulus is taken as 0.
Tensor idft2_modulus(const Spectrum& s);

enum class FilterMode {
    hadamard,  ///< re' = wr * re, im' = wi * im (C x H x W or 1 x H x W filters)
    conv3,     ///< re' = relu(conv3x3(re, wr)), im' = relu(conv3x3(im, wi)), circular padding
};

Spectrum spectral_filter(const Spectrum& s, const Tensor& wr, const Tensor& wi, FilterMode mode);

struct RadialBin {
    double normfreq;  ///< bin center in [0, 1]
    double mean_magnitude;
    double mean_power;       ///< mean of re^2 + im^2
    std::size_t population;  ///< (u, v) pairs per plane
};

/// Mean spectral magnitude against normalized radial frequency
/// r = sqrt(fu^2 + fv^2) / sqrt(0.5). Bin 0 holds only the DC term; the
/// remaining bins split (0, 1] evenly.
struct RadialProfile {
    std::vector<RadialBin> bins;
};

/// Profile of one spectrum; magnitudes are pooled over N and C.
RadialProfile radial_profile(const Spectrum& s, int bins);

/// Index of the radial bin that (u, v) falls into on an H x W grid.
int radial_bin_index(int u, int v, int H, int W, int bins);
/// Normalized radius of (u, v), in [0, 1].
double radial_frequency(int u, int v, int H, int W);

struct Energies {
    double spatial;
    double spectral;  ///< sum |X|^2 / (H W)
};

Energies parseval_check(const Tensor& x);

namespace fft {

bool is_pow2(int n);

/// In-place 2D transform of one H x W complex plane (row-major).
/// `inverse` flips the exponent sign; no normalization is applied.
void transform2d(std::span<std::complex<double>> plane, int H, int W, bool inverse);

}  // namespace fft

}  // namespace tfd
