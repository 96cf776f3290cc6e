// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The TFD Authors

#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tfd/image_io.hpp"
#include "tfd/rng.hpp"
#include "tfd/tensor.hpp"

namespace tfd {

struct BlurStage {
    double sigma = 2.0;
    int ksize = 0;  ///< 0 selects 2 * ceil(3 sigma) + 1
};

struct NoiseStage {
    double sigma255 = 20.0;  ///< standard deviation on the 0-255 scale
};

struct JpegStage {
    int quality = 30;
};

/// Recipe for one synthetic LR observation. Stages run in the fixed order
/// blur -> bicubic downsample -> noise -> jpeg; absent stages are skipped.
struct DegradationConfig {
    std::string name = "custom";
    std::optional<BlurStage> blur;
    std::optional<NoiseStage> noise;
    std::optional<JpegStage> jpeg;
    int scale = 4;

    NoiseLabel noise_label() const { return noise ? 1 : 0; }

    /// One of the eight named presets. Throws ConfigError listing the valid
    /// names otherwise.
    static DegradationConfig preset(std::string_view name);
};

/// clean, blur, noise, jpeg, blur+noise, blur+jpeg, noise+jpeg, blur+noise+jpeg
const std::array<std::string, 8>& preset_names();
bool is_preset_name(std::string_view name);

/// Normalized 1D Gaussian taps.
std::vector<double> gaussian_kernel1d(double sigma, int ksize);
int default_blur_ksize(double sigma);

/// Separable Gaussian blur with reflect padding, per channel.
Tensor gaussian_blur(const Tensor& img, double sigma, int ksize);

/// Catmull-Rom (a = -0.5) resampling, 4 taps per axis, edge clamping,
/// x_src = (x_dst + 0.5) * scale - 0.5. Extents must divide by `scale`.
Tensor bicubic_down(const Tensor& img, int scale);
/// Inverse mapping x_src = (x_dst + 0.5) / scale - 0.5.
Tensor bicubic_up(const Tensor& img, int scale);

/// Adds i.i.d. N(0, (sigma255/255)^2) then clamps to [0, 1].
Tensor add_gaussian_noise(const Tensor& img, double sigma255, Rng& rng);

/// Baseline-JPEG pixel path per channel: 8x8 DCT, quality-scaled luminance
/// quantization, reconstruction. No entropy coding (it is lossless).
Tensor jpeg_codec(const Tensor& img, int quality);
/// Quality-scaled quantization table in natural (row-major) order.
std::array<int, 64> jpeg_quant_table(int quality);

struct DegradeResult {
    Image8 lr;
    NoiseLabel label = 0;
    std::vector<std::string> trace;  ///< stages that actually ran, in order
};

DegradeResult apply(const DegradationConfig& config, const Image8& hr, Rng& rng);

}  // namespace tfd
