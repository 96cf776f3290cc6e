// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The TFD Authors

#include "tfd/metrics.hpp"

#include <cmath>
#include <iomanip>
#include <map>

#include "tfd/degrade.hpp"
#include "tfd/error.hpp"
#include "tfd/rng.hpp"

namespace tfd {

namespace {

void require_same(const Image8& a, const Image8& b, const char* op) {
    if (a.width != b.width || a.height != b.height || a.channels != b.channels)
        throw ShapeError(std::string(op) + ": image dimensions differ (" + std::to_string(a.width) + "x" +
                         std::to_string(a.height) + "x" + std::to_string(a.channels) + " vs " +
                         std::to_string(b.width) + "x" + std::to_string(b.height) + "x" +
                         std::to_string(b.channels) + ")");
}

// Separable weighted sum over every valid 11 x 11 window of one plane.
std::vector<double> window_sum(const std::vector<double>& plane, int W, int H, const std::array<double, 11>& g) {
    const int Wo = W - 10, Ho = H - 10;
    std::vector<double> rows(static_cast<std::size_t>(H) * Wo);
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < Wo; ++x) {
            double s = 0.0;
            for (int k = 0; k < 11; ++k) s += g[k] * plane[static_cast<std::size_t>(y) * W + x + k];
            rows[static_cast<std::size_t>(y) * Wo + x] = s;
        }
    std::vector<double> out(static_cast<std::size_t>(Ho) * Wo);
    for (int y = 0; y < Ho; ++y)
        for (int x = 0; x < Wo; ++x) {
            double s = 0.0;
            for (int k = 0; k < 11; ++k) s += g[k] * rows[static_cast<std::size_t>(y + k) * Wo + x];
            out[static_cast<std::size_t>(y) * Wo + x] = s;
        }
    return out;
}

}  // namespace

double psnr(const Image8& a, const Image8& b) {
    require_same(a, b, "psnr");
    if (a.data.empty()) throw ShapeError("psnr: empty image");
    double se = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        const double d = static_cast<double>(a.data[i]) - b.data[i];
        se += d * d;
    }
    if (se == 0.0) return kPsnrCap;
    const double mse = se / static_cast<double>(a.data.size());
    return std::min(kPsnrCap, 10.0 * std::log10(255.0 * 255.0 / mse));
}

double ssim(const Image8& a, const Image8& b) {
    require_same(a, b, "ssim");
    if (a.width < 11 || a.height < 11) throw ShapeError("ssim: image smaller than the 11x11 window");
    std::array<double, 11> g{};
    double gs = 0.0;
    for (int i = 0; i < 11; ++i) {
        g[i] = std::exp(-double((i - 5) * (i - 5)) / (2.0 * 1.5 * 1.5));
        gs += g[i];
    }
    for (double& v : g) v /= gs;
    const double C1 = (0.01 * 255) * (0.01 * 255), C2 = (0.03 * 255) * (0.03 * 255);
    const int W = a.width, H = a.height;
    const std::size_t HW = static_cast<std::size_t>(W) * H;
    double total = 0.0;
    for (int c = 0; c < a.channels; ++c) {
        std::vector<double> pa(HW), pb(HW), aa(HW), bb(HW), ab(HW);
        for (std::size_t i = 0; i < HW; ++i) {
            pa[i] = a.data[i * a.channels + c];
            pb[i] = b.data[i * b.channels + c];
            aa[i] = pa[i] * pa[i];
            bb[i] = pb[i] * pb[i];
            ab[i] = pa[i] * pb[i];
        }
        const auto ma = window_sum(pa, W, H, g), mb = window_sum(pb, W, H, g);
        const auto saa = window_sum(aa, W, H, g), sbb = window_sum(bb, W, H, g), sab = window_sum(ab, W, H, g);
        double s = 0.0;
        for (std::size_t i = 0; i < ma.size(); ++i) {
            const double va = saa[i] - ma[i] * ma[i];
            const double vb = sbb[i] - mb[i] * mb[i];
            const double cov = sab[i] - ma[i] * mb[i];
            s += ((2.0 * (ma[i] * mb[i]) + C1) * (2.0 * cov + C2)) /
                 ((ma[i] * ma[i] + mb[i] * mb[i] + C1) * (va + vb + C2));
        }
        total += s / static_cast<double>(ma.size());
    }
    return total / a.channels;
}

Image8 to_luma(const Image8& img) {
    if (img.channels == 1) return img;
    Image8 out(img.width, img.height, 1);
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        const double y = 0.299 * img.data[i * 3] + 0.587 * img.data[i * 3 + 1] + 0.114 * img.data[i * 3 + 2];
        out.data[i] = static_cast<std::uint8_t>(std::lround(std::clamp(y, 0.0, 255.0)));
    }
    return out;
}

std::vector<MetricRow> MetricReport::averages() const {
    std::vector<std::string> order;
    std::map<std::string, std::pair<MetricRow, int>> acc;
    for (const auto& r : rows) {
        auto [it, fresh] = acc.try_emplace(r.preset, MetricRow{r.preset, "AVERAGE", 0.0, 0.0}, 0);
        if (fresh) order.push_back(r.preset);
        it->second.first.psnr += r.psnr;
        it->second.first.ssim += r.ssim;
        ++it->second.second;
    }
    std::vector<MetricRow> out;
    MetricRow all{"AVERAGE", "AVERAGE", 0.0, 0.0};
    for (const auto& p : order) {
        auto [row, n] = acc[p];
        row.psnr /= n;
        row.ssim /= n;
        out.push_back(row);
    }
    if (!rows.empty()) {
        all.psnr = 0.0;
        all.ssim = 0.0;
        for (const auto& r : rows) {
            all.psnr += r.psnr;
            all.ssim += r.ssim;
        }
        all.psnr /= static_cast<double>(rows.size());
        all.ssim /= static_cast<double>(rows.size());
    }
    out.push_back(all);
    return out;
}

double MetricReport::mean_psnr(const std::string& preset) const {
    double s = 0.0;
    int n = 0;
    for (const auto& r : rows)
        if (r.preset == preset) {
            s += r.psnr;
            ++n;
        }
    if (n == 0) throw ConfigError("report has no rows for preset " + preset);
    return s / n;
}

void write_report_csv(const MetricReport& report, std::ostream& out) {
    out << "preset,image,psnr,ssim\n" << std::setprecision(10);
    for (const auto& r : report.rows) out << r.preset << ',' << r.image << ',' << r.psnr << ',' << r.ssim << '\n';
    for (const auto& r : report.averages()) out << r.preset << ',' << r.image << ',' << r.psnr << ',' << r.ssim << '\n';
}

MetricReport evaluate(const Upscaler& upscale, std::span<const Image8> hr_images, std::span<const std::string> names,
                      std::span<const std::string> presets, const EvalOptions& options) {
    if (names.size() != hr_images.size()) throw ConfigError("evaluate: one name per image required");
    const int unit = options.scale * options.align;
    MetricReport report;
    for (std::size_t p = 0; p < presets.size(); ++p) {
        DegradationConfig cfg = DegradationConfig::preset(presets[p]);
        cfg.scale = options.scale;
        for (std::size_t i = 0; i < hr_images.size(); ++i) {
            const Image8& full = hr_images[i];
            const int w = full.width / unit * unit, h = full.height / unit * unit;
            if (w == 0 || h == 0)
                throw DataError("evaluate: image " + names[i] + " is smaller than " + std::to_string(unit) + " pixels");
            const Image8 hr = crop(full, 0, 0, w, h);
            Rng rng(derive_seed(derive_seed(options.seed, p), i));
            const DegradeResult d = apply(cfg, hr, rng);
            const Image8 sr = from_tensor(upscale(to_tensor(d.lr)));
            MetricRow row{presets[p], names[i], 0.0, 0.0};
            if (options.y_only) {
                const Image8 ys = to_luma(sr), yh = to_luma(hr);
                row.psnr = psnr(ys, yh);
                row.ssim = ssim(ys, yh);
            } else {
                row.psnr = psnr(sr, hr);
                row.ssim = ssim(sr, hr);
            }
            report.rows.push_back(row);
        }
    }
    return report;
}

}  // namespace tfd
