// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The TFD Authors

#include "tfd/degrade.hpp"

#include <algorithm>
#include <cmath>

#include "tfd/error.hpp"

namespace tfd {

const std::array<std::string, 8>& preset_names() {
    static const std::array<std::string, 8> names{"clean",      "blur",      "noise",      "jpeg",
                                                  "blur+noise", "blur+jpeg", "noise+jpeg", "blur+noise+jpeg"};
    return names;
}

bool is_preset_name(std::string_view name) {
    const auto& n = preset_names();
    return std::find(n.begin(), n.end(), name) != n.end();
}

DegradationConfig DegradationConfig::preset(std::string_view name) {
    if (!is_preset_name(name)) {
        std::string valid;
        for (const auto& n : preset_names()) valid += (valid.empty() ? "" : ", ") + n;
        throw ConfigError("unknown degradation preset '" + std::string(name) + "' (valid: " + valid + ")");
    }
    DegradationConfig cfg;
    cfg.name = std::string(name);
    const auto has = [&](std::string_view stage) { return name.find(stage) != std::string_view::npos; };
    if (has("blur")) cfg.blur = BlurStage{};
    if (has("noise")) cfg.noise = NoiseStage{};
    if (has("jpeg")) cfg.jpeg = JpegStage{};
    return cfg;
}

// ---------------------------------------------------------------------------

namespace {

void require_image(const Tensor& t, const char* op) {
    if (t.shape().rank() != 4) throw ShapeError(std::string(op) + ": expected N x C x H x W, got " + t.shape().str());
}

int reflect(int i, int n) {
    if (n == 1) return 0;
    const int period = 2 * (n - 1);
    i = ((i % period) + period) % period;
    return i < n ? i : period - i;
}

double cubic(double x) {
    constexpr double a = -0.5;
    x = std::fabs(x);
    if (x <= 1.0) return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0;
    if (x < 2.0) return ((a * x - 5.0 * a) * x + 8.0 * a) * x - 4.0 * a;
    return 0.0;
}

// Resamples one axis of every plane; `along_x` selects the axis.
Tensor resample_axis(const Tensor& in, int out_extent, bool along_x, double ratio) {
    const int N = in.n(), C = in.c(), H = in.h(), W = in.w();
    const int src_extent = along_x ? W : H;
    const int oh = along_x ? H : out_extent, ow = along_x ? out_extent : W;
    Tensor out(Shape{N, C, oh, ow});
    auto o = out.mutable_data();
    auto s = in.data();

    std::vector<std::array<int, 4>> idx(static_cast<std::size_t>(out_extent));
    std::vector<std::array<double, 4>> wts(static_cast<std::size_t>(out_extent));
    for (int d = 0; d < out_extent; ++d) {
        const double src = (d + 0.5) * ratio - 0.5;
        const int x0 = static_cast<int>(std::floor(src));
        const double t = src - x0;
        for (int k = 0; k < 4; ++k) {
            idx[static_cast<std::size_t>(d)][k] = std::clamp(x0 - 1 + k, 0, src_extent - 1);
            wts[static_cast<std::size_t>(d)][k] = cubic(t - (k - 1));
        }
    }
    for (std::size_t p = 0; p < static_cast<std::size_t>(N) * C; ++p) {
        const double* ip = s.data() + p * H * W;
        double* op = o.data() + p * oh * ow;
        for (int y = 0; y < oh; ++y)
            for (int x = 0; x < ow; ++x) {
                const int d = along_x ? x : y;
                const auto& id = idx[static_cast<std::size_t>(d)];
                const auto& wt = wts[static_cast<std::size_t>(d)];
                double acc = 0.0;
                for (int k = 0; k < 4; ++k)
                    acc += wt[k] * (along_x ? ip[y * W + id[k]] : ip[id[k] * W + x]);
                op[y * ow + x] = acc;
            }
    }
    return out;
}

// Row-major 8x8 orthonormal DCT-II basis: basis[u][x] = C(u)/2 cos((2x+1)u pi/16).
const std::array<std::array<double, 8>, 8>& dct_basis() {
    static const auto basis = [] {
        std::array<std::array<double, 8>, 8> b{};
        for (int u = 0; u < 8; ++u)
            for (int x = 0; x < 8; ++x) {
                const double cu = u == 0 ? std::sqrt(0.5) : 1.0;
                b[u][x] = 0.5 * cu * std::cos((2 * x + 1) * u * M_PI / 16.0);
            }
        return b;
    }();
    return basis;
}

constexpr std::array<int, 64> kLuminanceTable{
    16, 11, 10, 16, 24,  40,  51,  61,  12, 12, 14, 19, 26,  58,  60,  55,  14, 13, 16, 24,  40,  57,
    69, 56, 14, 17, 22,  29,  51,  87,  80, 62, 18, 22, 37,  56,  68,  109, 103, 77, 24, 35,  55,  64,
    81, 104, 113, 92, 49, 64,  78,  87,  103, 121, 120, 101, 72, 92, 95,  98,  112, 100, 103, 99};

}  // namespace

std::vector<double> gaussian_kernel1d(double sigma, int ksize) {
    if (!(sigma > 0.0)) throw ConfigError("gaussian blur: sigma must be positive");
    if (ksize <= 0 || ksize % 2 == 0) throw ConfigError("gaussian blur: kernel size must be odd and positive");
    std::vector<double> k(static_cast<std::size_t>(ksize));
    const int c = ksize / 2;
    double total = 0.0;
    for (int i = 0; i < ksize; ++i) {
        k[static_cast<std::size_t>(i)] = std::exp(-double((i - c) * (i - c)) / (2.0 * sigma * sigma));
        total += k[static_cast<std::size_t>(i)];
    }
    for (double& v : k) v /= total;
    return k;
}

int default_blur_ksize(double sigma) { return 2 * static_cast<int>(std::ceil(3.0 * sigma)) + 1; }

Tensor gaussian_blur(const Tensor& img, double sigma, int ksize) {
    require_image(img, "gaussian_blur");
    const auto k = gaussian_kernel1d(sigma, ksize);
    const int r = ksize / 2;
    const int N = img.n(), C = img.c(), H = img.h(), W = img.w();
    const std::size_t HW = static_cast<std::size_t>(H) * W;
    std::vector<double> tmp(HW);
    Tensor out(img.shape());
    auto o = out.mutable_data();
    auto s = img.data();
    for (std::size_t p = 0; p < static_cast<std::size_t>(N) * C; ++p) {
        const double* ip = s.data() + p * HW;
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x) {
                double acc = 0.0;
                for (int i = -r; i <= r; ++i) acc += k[static_cast<std::size_t>(i + r)] * ip[y * W + reflect(x + i, W)];
                tmp[static_cast<std::size_t>(y) * W + x] = acc;
            }
        double* op = o.data() + p * HW;
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x) {
                double acc = 0.0;
                for (int i = -r; i <= r; ++i)
                    acc += k[static_cast<std::size_t>(i + r)] * tmp[static_cast<std::size_t>(reflect(y + i, H)) * W + x];
                op[y * W + x] = acc;
            }
    }
    return out;
}

Tensor bicubic_down(const Tensor& img, int scale) {
    require_image(img, "bicubic_down");
    if (scale < 1) throw ConfigError("bicubic_down: scale must be >= 1");
    if (img.h() % scale != 0 || img.w() % scale != 0)
        throw ShapeError("bicubic_down: " + img.shape().str() + " not divisible by " + std::to_string(scale));
    Tensor rows = resample_axis(img.detach(), img.w() / scale, true, scale);
    return resample_axis(rows, img.h() / scale, false, scale);
}

Tensor bicubic_up(const Tensor& img, int scale) {
    require_image(img, "bicubic_up");
    if (scale < 1) throw ConfigError("bicubic_up: scale must be >= 1");
    Tensor rows = resample_axis(img.detach(), img.w() * scale, true, 1.0 / scale);
    return resample_axis(rows, img.h() * scale, false, 1.0 / scale);
}

Tensor add_gaussian_noise(const Tensor& img, double sigma255, Rng& rng) {
    if (sigma255 < 0.0) throw ConfigError("add_gaussian_noise: sigma must be non-negative");
    Tensor out = img.detach();
    if (sigma255 == 0.0) return out;
    const double sd = sigma255 / 255.0;
    for (double& v : out.mutable_data()) v = std::clamp(v + sd * rng.gaussian(), 0.0, 1.0);
    return out;
}

std::array<int, 64> jpeg_quant_table(int quality) {
    if (quality < 1 || quality > 100) throw ConfigError("jpeg: quality must be in [1, 100]");
    const int scale = quality < 50 ? 5000 / quality : 200 - 2 * quality;
    std::array<int, 64> q{};
    for (int i = 0; i < 64; ++i) q[i] = std::clamp((kLuminanceTable[i] * scale + 50) / 100, 1, 255);
    return q;
}

Tensor jpeg_codec(const Tensor& img, int quality) {
    require_image(img, "jpeg_codec");
    const auto q = jpeg_quant_table(quality);
    const auto& B = dct_basis();
    const int N = img.n(), C = img.c(), H = img.h(), W = img.w();
    const int PH = (H + 7) / 8 * 8, PW = (W + 7) / 8 * 8;
    Tensor out(img.shape());
    auto o = out.mutable_data();
    auto s = img.data();
    std::vector<double> plane(static_cast<std::size_t>(PH) * PW);
    for (std::size_t p = 0; p < static_cast<std::size_t>(N) * C; ++p) {
        const double* ip = s.data() + p * H * W;
        // 8-bit samples, level shifted, edges replicated into the padding.
        for (int y = 0; y < PH; ++y)
            for (int x = 0; x < PW; ++x) {
                const double v = std::clamp(ip[std::min(y, H - 1) * W + std::min(x, W - 1)], 0.0, 1.0);
                plane[static_cast<std::size_t>(y) * PW + x] = std::round(v * 255.0) - 128.0;
            }
        double* op = o.data() + p * H * W;
        double blk[8][8], tmp[8][8], coef[8][8];
        for (int by = 0; by < PH; by += 8)
            for (int bx = 0; bx < PW; bx += 8) {
                for (int y = 0; y < 8; ++y)
                    for (int x = 0; x < 8; ++x) blk[y][x] = plane[static_cast<std::size_t>(by + y) * PW + bx + x];
                for (int y = 0; y < 8; ++y)
                    for (int v = 0; v < 8; ++v) {
                        double a = 0.0;
                        for (int x = 0; x < 8; ++x) a += B[v][x] * blk[y][x];
                        tmp[y][v] = a;
                    }
                for (int u = 0; u < 8; ++u)
                    for (int v = 0; v < 8; ++v) {
                        double a = 0.0;
                        for (int y = 0; y < 8; ++y) a += B[u][y] * tmp[y][v];
                        const double qv = q[u * 8 + v];
                        coef[u][v] = std::round(a / qv) * qv;
                    }
                for (int u = 0; u < 8; ++u)
                    for (int x = 0; x < 8; ++x) {
                        double a = 0.0;
                        for (int v = 0; v < 8; ++v) a += B[v][x] * coef[u][v];
                        tmp[u][x] = a;
                    }
                for (int y = 0; y < 8; ++y)
                    for (int x = 0; x < 8; ++x) {
                        if (by + y >= H || bx + x >= W) continue;
                        double a = 0.0;
                        for (int u = 0; u < 8; ++u) a += B[u][y] * tmp[u][x];
                        const double px = std::clamp(std::round(a + 128.0), 0.0, 255.0);
                        op[(by + y) * W + bx + x] = px / 255.0;
                    }
            }
    }
    return out;
}

DegradeResult apply(const DegradationConfig& config, const Image8& hr, Rng& rng) {
    DegradeResult res;
    Tensor x = to_tensor(hr);
    if (config.blur) {
        const int k = config.blur->ksize > 0 ? config.blur->ksize : default_blur_ksize(config.blur->sigma);
        x = gaussian_blur(x, config.blur->sigma, k);
        res.trace.emplace_back("blur");
    }
    x = bicubic_down(x, config.scale);
    res.trace.emplace_back("downsample");
    if (config.noise) {
        x = add_gaussian_noise(x, config.noise->sigma255, rng);
        res.trace.emplace_back("noise");
    }
    if (config.jpeg) {
        x = jpeg_codec(x, config.jpeg->quality);
        res.trace.emplace_back("jpeg");
    }
    res.lr = from_tensor(x);
    res.label = config.noise_label();
    return res;
}

}  // namespace tfd
