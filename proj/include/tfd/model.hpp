// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The TFD Authors

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "tfd/spectral.hpp"
#include "tfd/tensor.hpp"

namespace tfd {

enum class Fusion { multiplication, addition, concatenation };

Fusion parse_fusion(std::string_view name);
std::string fusion_name(Fusion f);

struct ArchConfig {
    int in_channels = 3;
    int channels = 16;
    int blocks = 8;
    int insert_at = 4;  ///< TFD sits after this many residual blocks
    int scale = 4;      ///< power of two; one nearest x2 + conv + relu stage per factor
    bool nd = true;
    bool sd = true;
    bool fd = true;
    Fusion fusion = Fusion::multiplication;
    int reduction_ratio = 4;
    int feature_size = 24;  ///< LR feature side the spectral filters are sized for
    double gate_threshold = 0.75;
    double mask_offset = 2.0;
    double ln_eps = 1e-6;

    bool denoiser_enabled() const { return sd || fd; }
    bool any_addon() const { return nd || sd || fd; }
    void validate() const;
};

/// Prefix of every parameter that belongs to the detector or denoiser.
inline constexpr std::string_view kAddonPrefix = "tfd.";

struct DetectResult {
    Tensor logits;                   ///< N x 2
    std::vector<double> confidence;  ///< softmax(logits)[noisy]
};

struct ForwardResult {
    Tensor sr;
    Tensor h_n;       ///< backbone feature at insert_at
    Tensor h_routed;  ///< what the rest of the trunk consumes
    Tensor logits;    ///< empty when nd is off
    std::vector<double> confidence;
    std::vector<int> denoised;  ///< batch rows that took the denoise path
    Tensor h_denoised;          ///< denoiser output for those rows, empty if none
};

/// Residual SR backbone with the detect / denoise add-on hooked in after
/// `insert_at` blocks.
class TfdModel {
public:
    TfdModel(const ArchConfig& config, std::uint64_t seed);

    const ArchConfig& config() const noexcept { return config_; }
    ParamStore& params() noexcept { return params_; }
    const ParamStore& params() const noexcept { return params_; }

    /// Pass a tape to record for backward; null runs inference.
    ForwardResult forward(const Tensor& lr, bool gate_enabled, Tape* tape = nullptr);
    /// Backbone prefix only: the features at insert_at.
    Tensor features(const Tensor& lr, Tape* tape = nullptr);
    /// Requires nd; throws ShapeError unless H, W equal feature_size.
    DetectResult detect(const Tensor& h, Tape* tape = nullptr);
    /// Requires sd or fd.
    Tensor denoise(const Tensor& h_n, Tape* tape = nullptr);

    std::size_t param_count() const { return params_.scalar_count(); }
    std::size_t addon_param_count() const { return params_.scalar_count(kAddonPrefix); }
    std::size_t backbone_param_count() const { return param_count() - addon_param_count(); }

    /// Full-resolution Hadamard filters (1 x H x W) expanded from the stored
    /// half-plane, bilinearly resampled when H x W differs from feature_size.
    std::pair<Tensor, Tensor> frequency_filters(int H, int W, Tape* tape = nullptr);

private:
    Tensor prefix(Binder& b, const Tensor& lr, Tensor& head_out);
    Tensor suffix(Binder& b, const Tensor& h, const Tensor& head_out);
    DetectResult detect_impl(Binder& b, const Tensor& h);
    Tensor denoise_impl(Binder& b, const Tensor& h_n);
    Tensor expand_filter(Binder& b, Param& half, int H, int W);
    Tensor conv(Binder& b, const std::string& name, const Tensor& x, int stride = 1);
    Tensor rau(Binder& b, const std::string& name, const Tensor& x);

    void add_conv(const std::string& name, int cout, int cin, int k, double gain = 1.0);
    void add_depthwise(const std::string& name, int c);
    void add_rau(const std::string& name, int c);

    ArchConfig config_;
    ParamStore params_;
    std::uint64_t seed_;
    std::uint64_t init_counter_ = 0;
};

/// Closed-form parameter totals for a config, without building the model.
struct ParamBudget {
    std::size_t backbone = 0;
    std::size_t addon = 0;
};
ParamBudget param_budget(const ArchConfig& config);

}  // namespace tfd
