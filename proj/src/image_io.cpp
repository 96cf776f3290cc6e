// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The TFD Authors

#include "tfd/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>

#include "tfd/error.hpp"

namespace tfd {

Image8::Image8(int w, int h, int c, std::uint8_t fill)
    : width(w), height(h), channels(c), data(static_cast<std::size_t>(w) * h * c, fill) {
    if (w <= 0 || h <= 0 || (c != 1 && c != 3))
        throw ShapeError("Image8: invalid geometry " + std::to_string(w) + "x" + std::to_string(h) + "x" +
                         std::to_string(c));
}

namespace {

bool is_space(std::uint8_t b) { return b == ' ' || b == '\t' || b == '\n' || b == '\r' || b == '\v' || b == '\f'; }

class HeaderReader {
public:
    explicit HeaderReader(const std::vector<std::uint8_t>& bytes) : b_(bytes) {}

    void skip_separators() {
        while (pos_ < b_.size()) {
            if (is_space(b_[pos_])) {
                ++pos_;
            } else if (b_[pos_] == '#') {
                while (pos_ < b_.size() && b_[pos_] != '\n') ++pos_;
            } else {
                break;
            }
        }
    }

    long number(const char* what) {
        skip_separators();
        const std::size_t start = pos_;
        last_start_ = start;
        long v = 0;
        while (pos_ < b_.size() && b_[pos_] >= '0' && b_[pos_] <= '9') {
            v = v * 10 + (b_[pos_] - '0');
            if (v > 1'000'000'000L) throw ParseError(std::string("header ") + what + " too large", start);
            ++pos_;
        }
        if (pos_ == start) throw ParseError(std::string("expected ") + what, start);
        return v;
    }

    std::size_t pos() const { return pos_; }
    std::size_t last_start() const { return last_start_; }
    void advance() { ++pos_; }

private:
    const std::vector<std::uint8_t>& b_;
    std::size_t pos_ = 0;
    std::size_t last_start_ = 0;
};

}  // namespace

Image8 parse_ppm(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6'))
        throw ParseError("malformed magic: expected P5 or P6", 0);
    const int channels = bytes[1] == '5' ? 1 : 3;
    HeaderReader rd(bytes);
    rd.advance();
    rd.advance();
    const long w = rd.number("width");
    const long h = rd.number("height");
    const long maxval = rd.number("maxval");
    const std::size_t maxval_at = rd.last_start();
    if (maxval != 255) throw ParseError("unsupported maxval " + std::to_string(maxval), maxval_at);
    if (w <= 0 || h <= 0) throw ParseError("zero image dimension", maxval_at);
    // Exactly one whitespace byte separates the header from the body.
    if (rd.pos() >= bytes.size() || !is_space(bytes[rd.pos()]))
        throw ParseError("missing whitespace after maxval", rd.pos());
    rd.advance();
    const std::size_t body = rd.pos();
    const std::size_t need = static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * channels;
    const std::size_t have = bytes.size() - body;
    if (have < need)
        throw ParseError("truncated body: expected " + std::to_string(need) + " bytes, found " + std::to_string(have),
                         bytes.size());
    if (have > need)
        throw ParseError("trailing data: expected " + std::to_string(need) + " bytes, found " + std::to_string(have),
                         body + need);
    Image8 img(static_cast<int>(w), static_cast<int>(h), channels);
    std::copy(bytes.begin() + static_cast<std::ptrdiff_t>(body), bytes.end(), img.data.begin());
    return img;
}

Image8 load_ppm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    try {
        return parse_ppm(bytes);
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what(), e.offset());
    }
}

std::vector<std::uint8_t> encode_ppm(const Image8& img) {
    if (img.channels != 1 && img.channels != 3) throw ShapeError("save_ppm: channels must be 1 or 3");
    if (img.data.size() != static_cast<std::size_t>(img.width) * img.height * img.channels)
        throw ShapeError("save_ppm: data length does not match geometry");
    const std::string header = std::string(img.channels == 1 ? "P5" : "P6") + "\n" + std::to_string(img.width) +
                               " " + std::to_string(img.height) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.insert(out.end(), img.data.begin(), img.data.end());
    return out;
}

void save_ppm(const Image8& img, const std::filesystem::path& path) {
    const auto bytes = encode_ppm(img);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for " + path.string());
}

Tensor to_tensor(const Image8& img) {
    const int C = img.channels, H = img.height, W = img.width;
    std::vector<double> v(img.data.size());
    for (int c = 0; c < C; ++c)
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x)
                v[(static_cast<std::size_t>(c) * H + y) * W + x] = img.at(x, y, c) / 255.0;
    return Tensor(Shape{1, C, H, W}, std::move(v));
}

Image8 from_tensor(const Tensor& t, int n) {
    if (t.shape().rank() != 4 || (t.c() != 1 && t.c() != 3))
        throw ShapeError("from_tensor: expected N x {1,3} x H x W, got " + t.shape().str());
    if (n < 0 || n >= t.n()) throw ShapeError("from_tensor: batch row out of range");
    const int C = t.c(), H = t.h(), W = t.w();
    Image8 img(W, H, C);
    for (int c = 0; c < C; ++c)
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x) {
                const double v = std::clamp(t.at(n, c, y, x), 0.0, 1.0) * 255.0;
                img.at(x, y, c) = static_cast<std::uint8_t>(std::round(v));
            }
    return img;
}

Image8 crop(const Image8& img, int x0, int y0, int w, int h) {
    if (x0 < 0 || y0 < 0 || w <= 0 || h <= 0 || x0 + w > img.width || y0 + h > img.height)
        throw ShapeError("crop: rectangle outside image");
    Image8 out(w, h, img.channels);
    const std::size_t row = static_cast<std::size_t>(w) * img.channels;
    for (int y = 0; y < h; ++y)
        std::copy_n(img.data.begin() + static_cast<std::ptrdiff_t>(
                                           (static_cast<std::size_t>(y0 + y) * img.width + x0) * img.channels),
                    row, out.data.begin() + static_cast<std::ptrdiff_t>(y * row));
    return out;
}

std::vector<Image8> extract_patches(const Image8& img, int patch, int stride, std::size_t limit) {
    if (patch <= 0 || stride <= 0) throw ConfigError("extract_patches: patch and stride must be positive");
    if (patch > img.width || patch > img.height)
        throw ShapeError("extract_patches: patch " + std::to_string(patch) + " exceeds image " +
                         std::to_string(img.width) + "x" + std::to_string(img.height));
    std::vector<Image8> out;
    for (int y = 0; y + patch <= img.height; y += stride)
        for (int x = 0; x + patch <= img.width; x += stride) {
            if (out.size() >= limit) return out;
            out.push_back(crop(img, x, y, patch, patch));
        }
    return out;
}

std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) throw IoError("not a directory: " + dir.string());
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(dir)) {
        if (!e.is_regular_file()) continue;
        const auto ext = e.path().extension();
        if (ext == ".ppm" || ext == ".pgm") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    return files;
}

}  // namespace tfd
