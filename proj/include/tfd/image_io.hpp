// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The TFD Authors

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "tfd/tensor.hpp"

namespace tfd {

/// 8-bit image, row-major with interleaved channels (1 = gray, 3 = RGB).
struct Image8 {
    int width = 0;
    int height = 0;
    int channels = 0;
    std::vector<std::uint8_t> data;

    Image8() = default;
    Image8(int w, int h, int c, std::uint8_t fill = 0);

    std::uint8_t& at(int x, int y, int c) {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    std::uint8_t at(int x, int y, int c) const {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    bool operator==(const Image8&) const = default;
};

/// Reads a binary PGM (P5) or PPM (P6) with maxval 255. Throws ParseError
/// with the failing byte offset on malformed input, IoError if unreadable.
Image8 load_ppm(const std::filesystem::path& path);
Image8 parse_ppm(const std::vector<std::uint8_t>& bytes);

/// Writes P5 for one channel, P6 for three.
void save_ppm(const Image8& img, const std::filesystem::path& path);
std::vector<std::uint8_t> encode_ppm(const Image8& img);

/// 1 x C x H x W tensor of sample / 255.
Tensor to_tensor(const Image8& img);
/// Clamps to [0, 1], scales by 255, rounds half away from zero. `n` picks the
/// batch row.
Image8 from_tensor(const Tensor& t, int n = 0);

/// Raster-order grid of square patches, no partial patches, at most `limit`.
std::vector<Image8> extract_patches(const Image8& img, int patch, int stride, std::size_t limit);

/// Sub-image copy; the rectangle must lie inside the image.
Image8 crop(const Image8& img, int x0, int y0, int w, int h);

/// Noise label: 1 iff the generating degradation included additive noise.
using NoiseLabel = int;

struct TrainingPatch {
    Image8 lr;
    Image8 hr;
    NoiseLabel label = 0;
    Image8 clean_lr;     ///< the same HR patch through the clean preset
    std::string preset;  ///< generating degradation preset
};

struct PatchSet {
    std::vector<TrainingPatch> patches;
    int scale = 4;
};

/// Sorted `*.ppm` / `*.pgm` files of a directory.
std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir);

}  // namespace tfd
