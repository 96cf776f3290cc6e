// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The TFD Authors

#pragma once

#include <cstdint>

#include "tfd/image_io.hpp"

namespace tfd {

/// Procedural test image: smooth shading, hard-edged shapes and oriented
/// stripe textures, so the spectrum decays roughly like a photograph's.
Image8 synth_image(int width, int height, int channels, std::uint64_t seed);

}  // namespace tfd
