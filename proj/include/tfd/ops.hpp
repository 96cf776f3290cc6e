// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The TFD Authors

#pragma once

#include <optional>
#include <span>
#include <vector>

#include "tfd/tensor.hpp"

// Differentiable tensor operations. Every function returns a fresh tensor,
// never writes to its inputs, and records itself on the inputs' tape when
// any input is tracked.

namespace tfd {

enum class ElementwiseOp { add, sub, mul, relu, sigmoid, abs };

Tensor elementwise(ElementwiseOp op, const Tensor& a, const Tensor* b = nullptr);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor relu(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor abs(const Tensor& a);
Tensor scale(const Tensor& a, double s);
Tensor add_scalar(const Tensor& a, double s);

Tensor reshape(const Tensor& a, Shape shape);

/// Sum / mean of every element as a shape-[1] tensor.
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
/// mean(|a - b|)
Tensor mean_abs_diff(const Tensor& a, const Tensor& b);

/// 2D cross-correlation, x: N x Cin x H x W, w: Cout x Cin x k x k, zero padding.
Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor* bias, int stride, int pad);

enum class Padding { zero, circular };

/// Per-channel k x k convolution, w: C x 1 x k x k.
Tensor depthwise_conv2d(const Tensor& x, const Tensor& w, const Tensor* bias = nullptr,
                        int stride = 1, int pad = 1, Padding mode = Padding::zero);

/// Normalizes each sample over (C, H, W), then applies per-channel gamma/beta.
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps);

/// Global average pooling to N x C x 1 x 1.
Tensor gap(const Tensor& x);

/// x * s with s: N x C x 1 x 1 broadcast over space.
Tensor scale_channels(const Tensor& x, const Tensor& s);

/// sigmoid(w2 . relu(w1 . gap(x))) scaling each channel of x.
/// w1: (C/r) x C, w2: C x (C/r). Throws ConfigError when C/r is not integral.
Tensor channel_attention(const Tensor& x, const Tensor& w1, const Tensor& w2);

/// x: N x C x H x W times w: C x H x W (or 1 x H x W, shared by channels),
/// broadcast over the batch.
Tensor modulate(const Tensor& x, const Tensor& w);

Tensor upsample_nearest2x(const Tensor& x);
Tensor concat_channels(const Tensor& a, const Tensor& b);

/// Batch-wise stack of N_i x C x H x W tensors along N.
Tensor concat_batch(std::span<const Tensor> parts);
/// Rows `indices` of the batch, in order.
Tensor take_samples(const Tensor& x, std::span<const int> indices);
/// out[n] = use_a[n] ? a[n] : b[n].
Tensor select_samples(const std::vector<bool>& use_a, const Tensor& a, const Tensor& b);

/// One output element as a weighted sum of source elements.
struct GatherTap {
    std::size_t src;
    double weight;
};

/// out[i] = sum of taps[offsets[i] .. offsets[i+1]).
Tensor weighted_gather(const Tensor& src, Shape out_shape, std::span<const std::size_t> offsets,
                       std::span<const GatherTap> taps);

/// Mean over the batch of -log softmax(logits)[label]; logits are N x 2 (or N x K).
Tensor cross_entropy(const Tensor& logits, std::span<const int> labels);

/// Row-wise softmax of an N x K tensor (untracked).
std::vector<double> softmax_rows(const Tensor& logits);

/// Stacks untracked 1 x C x H x W images into an N x C x H x W batch.
Tensor stack_images(std::span<const Tensor> images);

}  // namespace tfd
