// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The TFD Authors

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "tfd/tensor.hpp"

namespace tfd {

// "TFD1" followed by one record per parameter in store order:
// u32 name length, name bytes, u32 rank, rank x u64 extents, f64 values.
// All integers and floats are little-endian.

struct NamedTensor {
    std::string name;
    Tensor value;
};

std::vector<std::uint8_t> encode_checkpoint(const ParamStore& params);
std::vector<NamedTensor> decode_checkpoint(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const ParamStore& params, const std::filesystem::path& path);
std::vector<NamedTensor> load_checkpoint(const std::filesystem::path& path);

/// Copies checkpoint values into `params`. Names and shapes must match the
/// store exactly (same set, any order).
void restore(ParamStore& params, const std::vector<NamedTensor>& entries);

}  // namespace tfd
