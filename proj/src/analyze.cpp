// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The TFD Authors

#include "tfd/analyze.hpp"

#include <cmath>
#include <iomanip>

#include "tfd/degrade.hpp"
#include "tfd/error.hpp"
#include "tfd/ops.hpp"
#include "tfd/rng.hpp"
#include "tfd/synth.hpp"
#include "tfd/train.hpp"

namespace tfd {

double cosine_similarity(const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) throw ShapeError("cosine_similarity: " + a.shape().str() + " vs " + b.shape().str());
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.numel(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 && nb == 0.0) return 1.0;
    if (na == 0.0 || nb == 0.0) return 0.0;
    return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

std::vector<SimilarityRow> measure_similarity(TfdModel& model, std::span<const Image8> probe,
                                              std::span<const std::string> presets, std::uint64_t seed,
                                              std::size_t step) {
    DegradationConfig clean = DegradationConfig::preset("clean");
    clean.scale = model.config().scale;
    std::vector<Tensor> clean_feats;
    for (const Image8& img : probe) {
        Rng rng(0);
        clean_feats.push_back(model.features(to_tensor(apply(clean, img, rng).lr)));
    }
    std::vector<SimilarityRow> rows;
    for (std::size_t p = 0; p < presets.size(); ++p) {
        DegradationConfig cfg = DegradationConfig::preset(presets[p]);
        cfg.scale = model.config().scale;
        double s = 0.0;
        for (std::size_t i = 0; i < probe.size(); ++i) {
            Rng rng(derive_seed(derive_seed(seed, p), i));
            const Tensor f = model.features(to_tensor(apply(cfg, probe[i], rng).lr));
            s += cosine_similarity(clean_feats[i], f);
        }
        rows.push_back({step, presets[p], probe.empty() ? 1.0 : s / static_cast<double>(probe.size())});
    }
    return rows;
}

void write_similarity_csv(std::span<const SimilarityRow> rows, std::ostream& out) {
    out << "step,preset,cossim\n" << std::setprecision(17);
    for (const auto& r : rows) out << r.step << ',' << r.preset << ',' << r.cossim << '\n';
}

// ---------------------------------------------------------------------------

RadialProfile residual_spectrum(const Image8& clean_lr, const Image8& degraded_lr, int bins) {
    if (clean_lr.width != degraded_lr.width || clean_lr.height != degraded_lr.height ||
        clean_lr.channels != degraded_lr.channels)
        throw ShapeError("residual_spectrum: image sizes differ");
    return radial_profile(dft2(sub(to_tensor(degraded_lr), to_tensor(clean_lr))), bins);
}

RadialProfile residual_spectrum(std::span<const Image8> clean_lr, std::span<const Image8> degraded_lr, int bins) {
    if (clean_lr.size() != degraded_lr.size() || clean_lr.empty())
        throw ShapeError("residual_spectrum: need matching, nonempty image lists");
    RadialProfile mean;
    for (std::size_t i = 0; i < clean_lr.size(); ++i) {
        const RadialProfile p = residual_spectrum(clean_lr[i], degraded_lr[i], bins);
        if (i == 0) {
            mean = p;
            continue;
        }
        for (std::size_t k = 0; k < p.bins.size(); ++k) {
            mean.bins[k].mean_magnitude += p.bins[k].mean_magnitude;
            mean.bins[k].mean_power += p.bins[k].mean_power;
        }
    }
    const double n = static_cast<double>(clean_lr.size());
    for (auto& b : mean.bins) {
        b.mean_magnitude /= n;
        b.mean_power /= n;
    }
    return mean;
}

void write_profile_csv(const RadialProfile& profile, std::ostream& out) {
    out << "bin,normfreq,mean_magnitude\n" << std::setprecision(17);
    for (std::size_t k = 0; k < profile.bins.size(); ++k)
        out << k << ',' << profile.bins[k].normfreq << ',' << profile.bins[k].mean_magnitude << '\n';
}

// ---------------------------------------------------------------------------

BandErrors band_errors(const Spectrum& fit, const Spectrum& target, double low_band, double high_band) {
    const int H = target.re.h(), W = target.re.w();
    BandErrors e;
    for (int u = 0; u < H; ++u)
        for (int v = 0; v < W; ++v) {
            const std::size_t i = static_cast<std::size_t>(u) * W + v;
            const double mag = std::hypot(target.re[i], target.im[i]);
            if (mag < 1e-6) continue;
            const double err = std::hypot(fit.re[i] - target.re[i], fit.im[i] - target.im[i]) / mag;
            const double r = radial_frequency(u, v, H, W);
            if (r <= low_band) {
                e.low += err;
                ++e.low_count;
            }
            if (r >= 1.0 - high_band) {
                e.high += err;
                ++e.high_count;
            }
        }
    if (e.low_count) e.low /= static_cast<double>(e.low_count);
    if (e.high_count) e.high /= static_cast<double>(e.high_count);
    return e;
}

namespace {

Tensor coordinate_grid(int H, int W) {
    Tensor g(Shape{1, 2, H, W});
    auto d = g.mutable_data();
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            d[static_cast<std::size_t>(y) * W + x] = 2.0 * (x + 0.5) / W - 1.0;
            d[static_cast<std::size_t>(H) * W + static_cast<std::size_t>(y) * W + x] = 2.0 * (y + 0.5) / H - 1.0;
        }
    return g;
}

void add_dense(ParamStore& ps, const std::string& name, int cout, int cin, Rng& rng) {
    const double bound = std::sqrt(6.0 / cin);
    Tensor w(Shape{cout, cin, 1, 1});
    for (double& v : w.mutable_data()) v = rng.uniform(-bound, bound);
    ps.add(name + ".w", w);
    ps.add(name + ".b", Tensor(Shape{cout}));
}

Tensor mlp(ParamStore& ps, Binder& b, const Tensor& x) {
    auto layer = [&](const std::string& n, const Tensor& in) {
        Tensor bias = b(ps.get(n + ".b"));
        return conv2d(in, b(ps.get(n + ".w")), &bias, 1, 0);
    };
    return layer("out", relu(layer("fc2", relu(layer("fc1", x)))));
}

}  // namespace

FreqProbeResult freq_principle_probe(const Image8& target, const FreqProbeConfig& config) {
    if (target.channels != 1) throw ConfigError("freq probe: target must be grayscale");
    if (!fft::is_pow2(target.width) || !fft::is_pow2(target.height))
        throw ConfigError("freq probe: target extents must be powers of two");
    if (config.steps < 1 || config.log_every < 1 || config.hidden < 1) throw ConfigError("freq probe: bad schedule");
    const Tensor y = to_tensor(target);
    const Spectrum ty = dft2(y);
    const Tensor grid = coordinate_grid(target.height, target.width);

    ParamStore ps;
    Rng rng(config.seed);
    add_dense(ps, "fc1", config.hidden, 2, rng);
    add_dense(ps, "fc2", config.hidden, config.hidden, rng);
    add_dense(ps, "out", 1, config.hidden, rng);

    TrainConfig opt;
    opt.lr0 = config.lr;
    // Flat schedule: a cosine tail would stall the late high-band fit.
    opt.iters = 1 << 30;
    TrainState st;
    FreqProbeResult res;

    auto log = [&](std::size_t step, const Tensor& out) {
        const BandErrors e = band_errors(dft2(out.detach()), ty, config.low_band, config.high_band);
        if (e.low_count) {
            res.rows.push_back({step, "low", e.low});
            if (e.low < config.threshold && std::isinf(res.low_cross)) res.low_cross = static_cast<double>(step);
        }
        if (e.high_count) {
            res.rows.push_back({step, "high", e.high});
            if (e.high < config.threshold && std::isinf(res.high_cross)) res.high_cross = static_cast<double>(step);
        }
    };

    for (int step = 0; step <= config.steps; ++step) {
        Tape tape;
        Binder b(&tape);
        const Tensor out = mlp(ps, b, grid);
        if (step % config.log_every == 0 || step == config.steps) log(static_cast<std::size_t>(step), out);
        if (step == config.steps) break;
        const Tensor d = sub(out, y);
        tape.backward(mean(mul(d, d)));
        adam_step(ps, st, opt);
    }
    return res;
}

Image8 standard_probe_image() { return synth_image(32, 32, 1, 20260101); }

void write_freq_csv(std::span<const FreqErrorRow> rows, std::ostream& out) {
    out << "step,band,rel_error\n" << std::setprecision(17);
    for (const auto& r : rows) out << r.step << ',' << r.band << ',' << r.rel_error << '\n';
}

// ---------------------------------------------------------------------------

std::vector<SnrRow> snr_curve(const Tensor& content, const Tensor& noise, const SnrWeight& weight, int steps) {
    if (content.shape() != noise.shape()) throw ShapeError("snr_curve: content and noise shapes differ");
    if (steps < 1) throw ConfigError("snr_curve: need at least one step");
    if (weight.kind == SnrWeightKind::radial_power && !(weight.delta > 0.0))
        throw ConfigError("snr_curve: delta must be positive");
    const Spectrum c = dft2(content.detach()), n = dft2(noise.detach());
    const int H = content.h(), W = content.w();
    const std::size_t HW = static_cast<std::size_t>(H) * W, planes = content.numel() / HW;
    std::vector<double> r(HW), pc(HW, 0.0), pn(HW, 0.0);
    double noise_energy = 0.0;
    for (int u = 0; u < H; ++u)
        for (int v = 0; v < W; ++v) r[static_cast<std::size_t>(u) * W + v] = radial_frequency(u, v, H, W);
    for (std::size_t p = 0; p < planes; ++p)
        for (std::size_t i = 0; i < HW; ++i) {
            const std::size_t k = p * HW + i;
            pc[i] += c.re[k] * c.re[k] + c.im[k] * c.im[k];
            pn[i] += n.re[k] * n.re[k] + n.im[k] * n.im[k];
            noise_energy += n.re[k] * n.re[k] + n.im[k] * n.im[k];
        }
    if (noise_energy == 0.0) throw ConfigError("snr_curve: noise has zero energy");
    std::vector<SnrRow> rows;
    for (int t = 0; t < steps; ++t) {
        const double p = steps == 1 ? 0.0 : weight.p_max * t / (steps - 1);
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < HW; ++i) {
            const double w = weight.kind == SnrWeightKind::uniform ? 1.0 : std::pow(r[i] + weight.delta, p);
            num += w * pc[i];
            den += w * pn[i];
        }
        rows.push_back({static_cast<std::size_t>(t), num / den});
    }
    return rows;
}

std::vector<SnrRow> snr_curve(const Image8& content, double sigma255, const SnrWeight& weight, int steps,
                              std::uint64_t seed) {
    if (!(sigma255 > 0.0)) throw ConfigError("snr_curve: noise sigma must be positive");
    const Tensor c = to_tensor(content);
    Tensor n(c.shape());
    Rng rng(seed);
    for (double& v : n.mutable_data()) v = sigma255 / 255.0 * rng.gaussian();
    return snr_curve(c, n, weight, steps);
}

void write_snr_csv(std::span<const SnrRow> rows, std::ostream& out) {
    out << "step,snr\n" << std::setprecision(17);
    for (const auto& r : rows) out << r.step << ',' << r.snr << '\n';
}

// ---------------------------------------------------------------------------

AuditResult detection_audit(TfdModel& model, const Tensor& lr, std::span<const int> labels) {
    if (!model.config().nd) throw ConfigError("audit: model has no noise detector");
    if (!model.config().denoiser_enabled()) throw ConfigError("audit: model has no denoiser");
    if (lr.shape().rank() != 4 || static_cast<std::size_t>(lr.n()) != labels.size())
        throw ShapeError("audit: one label per batch row required");
    std::vector<int> noisy;
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i] == 1) noisy.push_back(static_cast<int>(i));
    AuditResult res;
    res.noisy = noisy.size();
    if (noisy.empty()) return res;
    const Tensor h = model.features(take_samples(lr, noisy));
    const DetectResult before = model.detect(h);
    const DetectResult after = model.detect(model.denoise(h));
    int nb = 0, na = 0;
    for (std::size_t i = 0; i < noisy.size(); ++i) {
        nb += before.confidence[i] > 0.5 ? 1 : 0;
        na += after.confidence[i] > 0.5 ? 1 : 0;
    }
    res.acc_before = static_cast<double>(nb) / static_cast<double>(noisy.size());
    res.acc_after = static_cast<double>(na) / static_cast<double>(noisy.size());
    return res;
}

}  // namespace tfd
