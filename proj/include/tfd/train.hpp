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
#include "tfd/model.hpp"
#include "tfd/tensor.hpp"

namespace tfd {

struct TrainConfig {
    double lambda_cls = 0.10;
    double lambda_feat = 0.01;
    double lr0 = 2e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps_adam = 1e-8;
    int batch = 8;
    int iters = 2000;
    double gate_threshold = 0.75;  ///< on the running detection accuracy
    double ema_decay = 0.99;
    std::uint64_t seed = 0;

    void validate() const;
};

struct TrainState {
    std::size_t step = 0;
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;
    bool gate_active = false;
    double det_acc_ema = 0.5;
};

/// mean |sr - hr|
Tensor loss_rec(const Tensor& sr, const Tensor& hr);
/// Batch mean of -log softmax(logits)[label].
Tensor loss_cls(const Tensor& logits, std::span<const int> labels);
/// mean |h_denoised - h_ref|
Tensor loss_feat(const Tensor& h_denoised, const Tensor& h_ref);

/// rec + lambda_cls * cls + (gate_active && denoised ? lambda_feat * feat : 0).
/// `cls` / `feat` may be null when the term does not exist.
Tensor total_loss(const Tensor& rec, const Tensor* cls, const Tensor* feat, const TrainConfig& cfg, bool gate_active,
                  bool sample_is_denoised);

/// lr0 * 0.5 * (1 + cos(pi * step / iters))
double cosine_lr(const TrainConfig& cfg, std::size_t step);

/// Advances state.step, applies one bias-corrected Adam update at
/// cosine_lr(state.step), then zeroes every gradient.
void adam_step(ParamStore& params, TrainState& state, const TrainConfig& cfg);

struct StepLoss {
    Tensor total;
    double rec = 0.0;
    double cls = 0.0;
    double feat = 0.0;
    ForwardResult forward;
};

/// Forward pass plus the composite objective for one batch. `clean_lr` holds
/// the noise-free LR counterpart of every row; only routed rows are used.
/// The feature target is a constant; `frozen_ref` supplies it precomputed
/// for every row instead of taking it from the current weights.
StepLoss step_loss(TfdModel& model, const Tensor& lr, const Tensor& hr, const Tensor& clean_lr,
                   std::span<const int> labels, const TrainConfig& cfg, bool gate_active, Tape* tape,
                   const Tensor* frozen_ref = nullptr);

struct HistoryRow {
    std::size_t step = 0;
    double lr = 0.0;
    double loss_rec = 0.0;
    double loss_cls = 0.0;
    double loss_feat = 0.0;
    double det_acc = 0.0;  ///< running (EMA) accuracy after this step
    bool gate = false;     ///< gate flag in effect during this step
};

void write_history_csv(std::span<const HistoryRow> rows, std::ostream& out);

/// Called after every optimizer step with the 1-based step count.
using StepHook = std::function<void(std::size_t step, TfdModel& model)>;

struct TrainResult {
    TrainState state;
    std::vector<HistoryRow> history;
};

/// Throws DataError on an empty set, or when nd is on and only one label
/// occurs.
TrainResult run_training(const PatchSet& data, TfdModel& model, const TrainConfig& cfg, const StepHook& hook = {});

struct PatchSpec {
    int lr_patch = 24;  ///< LR side; HR patches are lr_patch * scale
    int lr_stride = 24;
    std::size_t limit_per_image = 64;
};

/// Cuts HR patches on a raster grid and degrades each with a preset drawn
/// uniformly from `presets`, using a per-patch stream derived from `seed`.
PatchSet build_patch_set(std::span<const Image8> hr_images, const PatchSpec& spec, std::span<const std::string> presets,
                         int scale, std::uint64_t seed);

/// Stacks patch fields into batches for the model.
Tensor batch_lr(const PatchSet& set, std::span<const int> indices);
Tensor batch_hr(const PatchSet& set, std::span<const int> indices);
Tensor batch_clean_lr(const PatchSet& set, std::span<const int> indices);

}  // namespace tfd
