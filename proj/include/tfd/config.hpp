// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The TFD Authors

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "tfd/model.hpp"
#include "tfd/train.hpp"

namespace tfd {

struct DataConfig {
    std::string hr_dir;
    int patch = 24;  ///< LR patch side
    int stride = 24;
    std::size_t limit = 64;  ///< patches per image
};

struct EvalConfig {
    std::vector<std::string> presets;  ///< empty means all eight
    std::uint64_t seed = 0;
};

/// One experiment, read from strict JSON:
///
///   { "data": {"hr_dir", "patch", "stride", "limit"},
///     "degradations": ["clean", "noise", ...],
///     "arch": {"blocks", "channels", "insert_at", "nd", "sd", "fd", "fusion",
///              "reduction_ratio", "in_channels", "scale", "feature_size"},
///     "train": {"lambda_cls", "lambda_feat", "lr0", "beta1", "beta2", "eps",
///               "batch", "iters", "gate_threshold", "ema_decay", "seed"},
///     "eval": {"presets", "seed"},
///     "out_dir": "..." }
///
/// Every block and key is optional; unknown keys and wrong types throw
/// ConfigError.
struct ExperimentConfig {
    DataConfig data;
    std::vector<std::string> degradations;  ///< empty means all eight
    ArchConfig arch;
    TrainConfig train;
    EvalConfig eval;
    std::string out_dir = "out";

    std::vector<std::string> train_presets() const;
    std::vector<std::string> eval_presets() const;
    void validate() const;
};

ExperimentConfig parse_experiment(const std::string& json_text);
/// Throws IoError when the file cannot be read.
ExperimentConfig load_experiment(const std::filesystem::path& path);
/// Canonical JSON with every field spelled out.
std::string dump_experiment(const ExperimentConfig& config);

}  // namespace tfd
