// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The TFD Authors

#pragma once

#include <cstdint>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "tfd/image_io.hpp"
#include "tfd/model.hpp"
#include "tfd/spectral.hpp"
#include "tfd/tensor.hpp"

namespace tfd {

/// dot(a, b) / (|a| |b|) over the flattened tensors; 1 when both are zero.
double cosine_similarity(const Tensor& a, const Tensor& b);

struct SimilarityRow {
    std::size_t step = 0;
    std::string preset;
    double cossim = 0.0;  ///< mean over the probe images
};

/// Feature at insert_at for the clean-preset LR against each preset's LR,
/// averaged over `probe`. Degradation streams derive from `seed`.
std::vector<SimilarityRow> measure_similarity(TfdModel& model, std::span<const Image8> probe,
                                              std::span<const std::string> presets, std::uint64_t seed,
                                              std::size_t step = 0);

void write_similarity_csv(std::span<const SimilarityRow> rows, std::ostream& out);

/// Profile of |DFT(degraded - clean)| in LR pixel space.
RadialProfile residual_spectrum(const Image8& clean_lr, const Image8& degraded_lr, int bins);
/// Bin-wise mean of residual profiles over image pairs.
RadialProfile residual_spectrum(std::span<const Image8> clean_lr, std::span<const Image8> degraded_lr, int bins);

void write_profile_csv(const RadialProfile& profile, std::ostream& out);

struct FreqProbeConfig {
    int hidden = 64;
    int steps = 2000;
    double lr = 1e-3;
    int log_every = 10;
    double low_band = 0.1;   ///< bottom fraction of normalized radius
    double high_band = 0.3;  ///< top fraction of normalized radius
    double threshold = 0.5;
    std::uint64_t seed = 0;
};

struct FreqErrorRow {
    std::size_t step = 0;
    std::string band;  ///< "low" or "high"
    double rel_error = 0.0;
};

struct FreqProbeResult {
    std::vector<FreqErrorRow> rows;
    /// First logged step whose band error is below the threshold; infinity
    /// when it never gets there.
    double low_cross = std::numeric_limits<double>::infinity();
    double high_cross = std::numeric_limits<double>::infinity();
};

/// Per-frequency relative error |S(u,v) - H(u,v)| / |H(u,v)| averaged over a
/// radial band, skipping |H| < 1e-6.
struct BandErrors {
    double low = 0.0;
    double high = 0.0;
    std::size_t low_count = 0;
    std::size_t high_count = 0;
};
BandErrors band_errors(const Spectrum& fit, const Spectrum& target, double low_band, double high_band);

/// Fits a two-hidden-layer ReLU perceptron (x, y) -> intensity to a gray
/// power-of-two target with full-batch MSE and Adam, logging band errors.
FreqProbeResult freq_principle_probe(const Image8& target, const FreqProbeConfig& config);

/// Probe target used by the CLI and the acceptance suite.
Image8 standard_probe_image();

void write_freq_csv(std::span<const FreqErrorRow> rows, std::ostream& out);

enum class SnrWeightKind { uniform, radial_power };

struct SnrWeight {
    SnrWeightKind kind = SnrWeightKind::radial_power;
    double delta = 0.01;
    double p_max = 4.0;
};

struct SnrRow {
    std::size_t step = 0;
    double snr = 0.0;
};

/// SNR(t) = sum w |F(content)|^2 / sum w |F(noise)|^2 with
/// w = (r + delta)^p(t), p ramping linearly from 0 to p_max over the steps.
/// Throws ConfigError when the noise carries no energy.
std::vector<SnrRow> snr_curve(const Tensor& content, const Tensor& noise, const SnrWeight& weight, int steps);
/// Gaussian noise realization of sigma255 / 255 drawn from `seed`.
std::vector<SnrRow> snr_curve(const Image8& content, double sigma255, const SnrWeight& weight, int steps,
                              std::uint64_t seed);

void write_snr_csv(std::span<const SnrRow> rows, std::ostream& out);

struct AuditResult {
    double acc_before = 0.0;
    double acc_after = 0.0;
    std::size_t noisy = 0;  ///< samples in the denominator
};

/// Over the label-1 rows only: fraction whose h_n is classified noisy, and
/// fraction still classified noisy after forcing the denoise path.
AuditResult detection_audit(TfdModel& model, const Tensor& lr, std::span<const int> labels);

}  // namespace tfd
