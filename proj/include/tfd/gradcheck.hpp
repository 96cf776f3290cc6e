// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The TFD Authors

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "tfd/model.hpp"
#include "tfd/tensor.hpp"

namespace tfd {

struct GradCheckOptions {
    std::size_t coords = 100;  ///< sampled coordinates per check (all of them when fewer exist)
    double rel_tol = 1e-4;
    double abs_tol = 1e-6;
    double step = 1e-5;  ///< h = step * max(1, |theta|)
    std::uint64_t seed = 0;
    int max_resample = 200;  ///< coordinate redraws allowed for kinks
};

struct GradCheckResult {
    std::string name;
    std::size_t checked = 0;
    std::size_t failed = 0;
    std::size_t kinks = 0;  ///< coordinates skipped because the loss is not smooth there
    double max_rel = 0.0;
    double max_abs = 0.0;

    bool pass() const { return failed == 0 && checked > 0; }
};

/// Builds a scalar loss from leaves that the checker has placed on `tape`.
using LeafLoss = std::function<Tensor(std::span<const Tensor> leaves)>;

/// Central-difference check of d(loss)/d(inputs) over sampled coordinates.
/// A coordinate fails when |analytic - numeric| > abs_tol and the relative
/// error exceeds rel_tol. A failing coordinate is redrawn instead when the
/// loss is not smooth across the stencil: its one-sided slopes differ by at
/// least the error, or halving the step moves the estimate by half of it.
GradCheckResult check_gradient(const std::string& name, std::vector<Tensor> inputs, const LeafLoss& loss,
                               const GradCheckOptions& options);

/// Same check over every scalar of a parameter store. `loss` runs a forward
/// pass recording onto the tape it is given (null for plain evaluation).
GradCheckResult check_param_gradient(const std::string& name, ParamStore& params,
                                     const std::function<Tensor(Tape*)>& loss, const GradCheckOptions& options);

/// Every differentiable op plus the composite model objective on `arch`
/// (shrunk to a small input so the run stays quick).
std::vector<GradCheckResult> run_gradient_suite(const ArchConfig& arch, const GradCheckOptions& options);

}  // namespace tfd
