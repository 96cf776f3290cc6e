// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The TFD Authors

#pragma once

#include <cstdint>
#include <functional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "tfd/image_io.hpp"
#include "tfd/tensor.hpp"

namespace tfd {

inline constexpr double kPsnrCap = 99.0;

/// 10 log10(255^2 / MSE) over all samples; kPsnrCap for identical images.
double psnr(const Image8& a, const Image8& b);

/// Mean SSIM over valid 11x11 Gaussian windows (sigma 1.5), averaged over
/// channels. Needs both extents >= 11.
double ssim(const Image8& a, const Image8& b);

/// BT.601 luma, rounded to 8 bits. Gray images pass through.
Image8 to_luma(const Image8& img);

struct MetricRow {
    std::string preset;
    std::string image;
    double psnr = 0.0;
    double ssim = 0.0;
};

struct MetricReport {
    std::vector<MetricRow> rows;  ///< per image, grouped by preset in request order

    /// One AVERAGE row per preset, then the overall AVERAGE row.
    std::vector<MetricRow> averages() const;
    double mean_psnr(const std::string& preset) const;
};

/// `preset,image,psnr,ssim` rows, then the AVERAGE rows.
void write_report_csv(const MetricReport& report, std::ostream& out);

/// Maps a 1 x C x h x w LR tensor to its 1 x C x (h s) x (w s) estimate.
using Upscaler = std::function<Tensor(const Tensor& lr)>;

struct EvalOptions {
    int scale = 4;
    int align = 4;  ///< HR is cropped so the LR extents are multiples of this
    std::uint64_t seed = 0;
    bool y_only = false;
};

/// Degrades every HR image under every preset with deterministic per-image
/// streams, upscales, and scores against the cropped HR.
MetricReport evaluate(const Upscaler& upscale, std::span<const Image8> hr_images, std::span<const std::string> names,
                      std::span<const std::string> presets, const EvalOptions& options);

}  // namespace tfd
