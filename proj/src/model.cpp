// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The TFD Authors

#include "tfd/model.hpp"

#include <cmath>
#include <map>

#include "tfd/error.hpp"
#include "tfd/ops.hpp"
#include "tfd/rng.hpp"

namespace tfd {

Fusion parse_fusion(std::string_view name) {
    if (name == "multiplication") return Fusion::multiplication;
    if (name == "addition") return Fusion::addition;
    if (name == "concatenation") return Fusion::concatenation;
    throw ConfigError("unknown fusion mode '" + std::string(name) +
                      "' (valid: multiplication, addition, concatenation)");
}

std::string fusion_name(Fusion f) {
    switch (f) {
        case Fusion::multiplication: return "multiplication";
        case Fusion::addition: return "addition";
        case Fusion::concatenation: return "concatenation";
    }
    return "?";
}

void ArchConfig::validate() const {
    if (in_channels != 1 && in_channels != 3) throw ConfigError("arch: in_channels must be 1 or 3");
    if (channels < 2) throw ConfigError("arch: channels must be >= 2");
    if (blocks < 1) throw ConfigError("arch: blocks must be >= 1");
    if (insert_at < 0 || insert_at > blocks) throw ConfigError("arch: insert_at must lie in [0, blocks]");
    if (scale < 1 || (scale & (scale - 1)) != 0) throw ConfigError("arch: scale must be a power of two");
    if (!(gate_threshold > 0.0 && gate_threshold < 1.0)) throw ConfigError("arch: gate_threshold must lie in (0, 1)");
    if (!(ln_eps > 0.0)) throw ConfigError("arch: ln_eps must be positive");
    if (fd && feature_size < 1) throw ConfigError("arch: feature_size must be positive");
    if (sd) {
        if (reduction_ratio < 1 || channels % reduction_ratio != 0)
            throw ConfigError("arch: reduction_ratio " + std::to_string(reduction_ratio) + " does not divide " +
                              std::to_string(channels) + " channels");
        if (feature_size % 4 != 0) throw ConfigError("arch: feature_size must be divisible by 4");
    }
}

// ---------------------------------------------------------------------------

TfdModel::TfdModel(const ArchConfig& config, std::uint64_t seed) : config_(config), seed_(seed) {
    config_.validate();
    const int C = config_.channels;

    add_conv("head", C, config_.in_channels, 3);
    for (int i = 0; i < config_.blocks; ++i) {
        add_conv("block" + std::to_string(i) + ".conv1", C, C, 3);
        add_conv("block" + std::to_string(i) + ".conv2", C, C, 3);
    }
    add_conv("trunk", C, C, 3);
    for (int s = 1, i = 0; s < config_.scale; s *= 2, ++i) add_conv("up" + std::to_string(i), C, C, 3);
    add_conv("tail", config_.in_channels, C, 3);

    if (config_.nd) {
        const int hidden = std::max(1, C / 2);
        for (const char* n : {"tfd.det.wr", "tfd.det.wi"}) {
            Tensor k(Shape{C, 1, 3, 3});
            Rng rng(derive_seed(seed_, init_counter_++));
            const double bound = std::sqrt(6.0 / 9.0);
            for (double& v : k.mutable_data()) v = rng.uniform(-bound, bound);
            params_.add(n, k);
        }
        params_.add("tfd.det.ln.g", Tensor(Shape{C}, 1.0));
        params_.add("tfd.det.ln.b", Tensor(Shape{C}));
        add_conv("tfd.det.fc1", hidden, C, 1);
        add_conv("tfd.det.fc2", 2, hidden, 1);
    }
    if (config_.fd) {
        const int fs = config_.feature_size;
        params_.add("tfd.freq.wr", Tensor(Shape{fs, fs / 2 + 1}, 1.0));
        params_.add("tfd.freq.wi", Tensor(Shape{fs, fs / 2 + 1}, 1.0));
    }
    if (config_.sd) {
        add_rau("tfd.enc1", C);
        add_depthwise("tfd.down1", C);
        add_rau("tfd.enc2", C);
        add_depthwise("tfd.down2", C);
        add_rau("tfd.mid", C);
        add_depthwise("tfd.up1", C);
        add_rau("tfd.dec1", C);
        add_depthwise("tfd.up2", C);
        add_rau("tfd.dec2", C);
        // Lambda starts as a pass-through of h_n plus a small h_up term.
        add_conv("tfd.fuse_in", C, 2 * C, 1, 0.1);
        auto w = params_.get("tfd.fuse_in.w").value.mutable_data();
        for (int o = 0; o < C; ++o)
            for (int i = 0; i < C; ++i) w[static_cast<std::size_t>(o) * 2 * C + C + i] = o == i ? 1.0 : 0.0;
    }
    if (config_.fd && config_.sd && config_.fusion == Fusion::concatenation) add_conv("tfd.fuse_out", C, 2 * C, 1);
}

void TfdModel::add_conv(const std::string& name, int cout, int cin, int k, double gain) {
    Rng rng(derive_seed(seed_, init_counter_++));
    const double bound = gain * std::sqrt(6.0 / (static_cast<double>(cin) * k * k));
    Tensor w(Shape{cout, cin, k, k});
    for (double& v : w.mutable_data()) v = rng.uniform(-bound, bound);
    params_.add(name + ".w", w);
    params_.add(name + ".b", Tensor(Shape{cout}));
}

void TfdModel::add_depthwise(const std::string& name, int c) {
    Rng rng(derive_seed(seed_, init_counter_++));
    const double bound = std::sqrt(6.0 / 9.0);
    Tensor w(Shape{c, 1, 3, 3});
    for (double& v : w.mutable_data()) v = rng.uniform(-bound, bound);
    params_.add(name + ".w", w);
    params_.add(name + ".b", Tensor(Shape{c}));
}

void TfdModel::add_rau(const std::string& name, int c) {
    const int r = c / config_.reduction_ratio;
    params_.add(name + ".ln.g", Tensor(Shape{c}, 1.0));
    params_.add(name + ".ln.b", Tensor(Shape{c}));
    add_conv(name + ".pw1", c, c, 1);
    add_depthwise(name + ".dw", c);
    for (auto [n, rows, cols] : {std::tuple{".ca.w1", r, c}, std::tuple{".ca.w2", c, r}}) {
        Rng rng(derive_seed(seed_, init_counter_++));
        const double bound = std::sqrt(6.0 / cols);
        Tensor w(Shape{rows, cols});
        for (double& v : w.mutable_data()) v = rng.uniform(-bound, bound);
        params_.add(name + n, w);
    }
    add_conv(name + ".pw2", c, c, 1);
}

// ---------------------------------------------------------------------------

Tensor TfdModel::conv(Binder& b, const std::string& name, const Tensor& x, int stride) {
    Tensor w = b(params_.get(name + ".w"));
    Tensor bias = b(params_.get(name + ".b"));
    const int k = w.shape()[2];
    if (w.shape()[1] == 1 && x.c() == w.shape()[0] && x.c() > 1)
        return depthwise_conv2d(x, w, &bias, stride, k / 2);
    return conv2d(x, w, &bias, stride, k / 2);
}

Tensor TfdModel::rau(Binder& b, const std::string& name, const Tensor& x) {
    Tensor y = layer_norm(x, b(params_.get(name + ".ln.g")), b(params_.get(name + ".ln.b")), config_.ln_eps);
    y = conv(b, name + ".pw1", y);
    y = conv(b, name + ".dw", y);
    y = channel_attention(y, b(params_.get(name + ".ca.w1")), b(params_.get(name + ".ca.w2")));
    y = conv(b, name + ".pw2", y);
    return add(y, x);
}

Tensor TfdModel::prefix(Binder& b, const Tensor& lr, Tensor& head_out) {
    if (lr.shape().rank() != 4 || lr.c() != config_.in_channels)
        throw ShapeError("model: expected N x " + std::to_string(config_.in_channels) + " x h x w input, got " +
                         lr.shape().str());
    head_out = conv(b, "head", lr);
    Tensor h = head_out;
    for (int i = 0; i < config_.insert_at; ++i) {
        const std::string p = "block" + std::to_string(i);
        h = add(h, conv(b, p + ".conv2", relu(conv(b, p + ".conv1", h))));
    }
    return h;
}

Tensor TfdModel::suffix(Binder& b, const Tensor& h_in, const Tensor& head_out) {
    Tensor h = h_in;
    for (int i = config_.insert_at; i < config_.blocks; ++i) {
        const std::string p = "block" + std::to_string(i);
        h = add(h, conv(b, p + ".conv2", relu(conv(b, p + ".conv1", h))));
    }
    h = add(conv(b, "trunk", h), head_out);
    for (int s = 1, i = 0; s < config_.scale; s *= 2, ++i)
        h = relu(conv(b, "up" + std::to_string(i), upsample_nearest2x(h)));
    return conv(b, "tail", h);
}

DetectResult TfdModel::detect_impl(Binder& b, const Tensor& h) {
    const Spectrum s = dft2(h);
    const Spectrum f = spectral_filter(s, b(params_.get("tfd.det.wr")), b(params_.get("tfd.det.wi")), FilterMode::conv3);
    Tensor pooled = gap(idft2_modulus(f));
    pooled = layer_norm(pooled, b(params_.get("tfd.det.ln.g")), b(params_.get("tfd.det.ln.b")), config_.ln_eps);
    Tensor z = relu(conv(b, "tfd.det.fc1", pooled));
    Tensor logits = conv(b, "tfd.det.fc2", z);
    DetectResult r;
    r.logits = reshape(logits, Shape{h.n(), 2});
    const auto sm = softmax_rows(r.logits);
    for (int n = 0; n < h.n(); ++n) r.confidence.push_back(sm[static_cast<std::size_t>(n) * 2 + 1]);
    return r;
}

Tensor TfdModel::expand_filter(Binder& b, Param& half, int H, int W) {
    const int Hs = half.value.shape()[0];
    const int Vs = half.value.shape()[1];
    const int Ws = config_.feature_size;
    std::vector<std::size_t> offsets{0};
    std::vector<GatherTap> taps;
    for (int u = 0; u < H; ++u)
        for (int v = 0; v < W; ++v) {
            const int su = u < (H + 1) / 2 ? u : u - H;
            const int sv = v < (W + 1) / 2 ? v : v - W;
            double a = static_cast<double>(su) * Hs / H;
            double c = static_cast<double>(sv) * Ws / W;
            if (c < 0.0) {
                a = -a;
                c = -c;
            }
            const double a0 = std::floor(a), c0 = std::floor(c);
            const double fa = a - a0, fc = c - c0;
            const int r0 = static_cast<int>(a0), k0 = static_cast<int>(c0);
            for (int da = 0; da < 2; ++da)
                for (int dc = 0; dc < 2; ++dc) {
                    const double wt = (da ? fa : 1.0 - fa) * (dc ? fc : 1.0 - fc);
                    if (wt == 0.0) continue;
                    const int row = ((r0 + da) % Hs + Hs) % Hs;
                    const int col = std::min(k0 + dc, Vs - 1);
                    taps.push_back({static_cast<std::size_t>(row) * Vs + col, wt});
                }
            offsets.push_back(taps.size());
        }
    return weighted_gather(b(half), Shape{1, H, W}, offsets, taps);
}

std::pair<Tensor, Tensor> TfdModel::frequency_filters(int H, int W, Tape* tape) {
    if (!config_.fd) throw ConfigError("model: frequency branch is disabled");
    Binder b(tape);
    return {expand_filter(b, params_.get("tfd.freq.wr"), H, W), expand_filter(b, params_.get("tfd.freq.wi"), H, W)};
}

Tensor TfdModel::denoise_impl(Binder& b, const Tensor& hn) {
    Tensor hf, hs;
    if (config_.fd) {
        const Tensor wr = expand_filter(b, params_.get("tfd.freq.wr"), hn.h(), hn.w());
        const Tensor wi = expand_filter(b, params_.get("tfd.freq.wi"), hn.h(), hn.w());
        const Spectrum f = spectral_filter(dft2(hn), wr, wi, FilterMode::hadamard);
        hf = sigmoid(add_scalar(idft2(f), config_.mask_offset));
    }
    if (config_.sd) {
        if (hn.h() % 4 != 0 || hn.w() % 4 != 0)
            throw ShapeError("denoise: spatial branch needs extents divisible by 4, got " + hn.shape().str());
        Tensor e1 = rau(b, "tfd.enc1", hn);
        Tensor e2 = rau(b, "tfd.enc2", conv(b, "tfd.down1", e1, 2));
        Tensor m = rau(b, "tfd.mid", conv(b, "tfd.down2", e2, 2));
        Tensor d1 = rau(b, "tfd.dec1", add(conv(b, "tfd.up1", upsample_nearest2x(m)), e2));
        Tensor d2 = rau(b, "tfd.dec2", add(conv(b, "tfd.up2", upsample_nearest2x(d1)), e1));
        hs = conv(b, "tfd.fuse_in", concat_channels(d2, hn));
    }
    if (config_.fd && config_.sd) {
        switch (config_.fusion) {
            case Fusion::multiplication: return mul(hf, hs);
            case Fusion::addition: return add(hf, hs);
            case Fusion::concatenation: return conv(b, "tfd.fuse_out", concat_channels(hf, hs));
        }
    }
    if (config_.fd) return mul(hf, hn);
    return hs;
}

// ---------------------------------------------------------------------------

Tensor TfdModel::features(const Tensor& lr, Tape* tape) {
    Binder b(tape);
    Tensor head;
    return prefix(b, lr, head);
}

DetectResult TfdModel::detect(const Tensor& h, Tape* tape) {
    if (!config_.nd) throw ConfigError("model: noise detection is disabled");
    if (h.shape().rank() != 4 || h.c() != config_.channels || h.h() != config_.feature_size ||
        h.w() != config_.feature_size)
        throw ShapeError("detect: expected N x " + std::to_string(config_.channels) + " x " +
                         std::to_string(config_.feature_size) + " x " + std::to_string(config_.feature_size) +
                         ", got " + h.shape().str());
    Binder b(tape);
    return detect_impl(b, h);
}

Tensor TfdModel::denoise(const Tensor& h_n, Tape* tape) {
    if (!config_.denoiser_enabled()) throw ConfigError("model: denoiser is disabled");
    if (h_n.shape().rank() != 4 || h_n.c() != config_.channels)
        throw ShapeError("denoise: expected N x " + std::to_string(config_.channels) + " x H x W, got " +
                         h_n.shape().str());
    Binder b(tape);
    return denoise_impl(b, h_n);
}

ForwardResult TfdModel::forward(const Tensor& lr, bool gate_enabled, Tape* tape) {
    Binder b(tape);
    ForwardResult r;
    Tensor head;
    r.h_n = prefix(b, lr, head);
    Tensor h = r.h_n;
    const int N = lr.n();
    if (config_.nd) {
        DetectResult d = detect_impl(b, r.h_n);
        r.logits = d.logits;
        r.confidence = std::move(d.confidence);
    }
    if (config_.denoiser_enabled()) {
        for (int n = 0; n < N; ++n) {
            const bool route = !config_.nd ||
                               (gate_enabled && r.confidence[static_cast<std::size_t>(n)] > config_.gate_threshold);
            if (route) r.denoised.push_back(n);
        }
        if (static_cast<int>(r.denoised.size()) == N) {
            r.h_denoised = denoise_impl(b, r.h_n);
            h = r.h_denoised;
        } else if (!r.denoised.empty()) {
            r.h_denoised = denoise_impl(b, take_samples(r.h_n, r.denoised));
            std::vector<int> perm(static_cast<std::size_t>(N));
            for (int n = 0; n < N; ++n) perm[static_cast<std::size_t>(n)] = n;
            for (std::size_t k = 0; k < r.denoised.size(); ++k)
                perm[static_cast<std::size_t>(r.denoised[k])] = N + static_cast<int>(k);
            const Tensor parts[] = {r.h_n, r.h_denoised};
            h = take_samples(concat_batch(parts), perm);
        }
    }
    r.h_routed = h;
    r.sr = suffix(b, h, head);
    return r;
}

ParamBudget param_budget(const ArchConfig& config) {
    TfdModel m(config, 0);
    return {m.backbone_param_count(), m.addon_param_count()};
}

}  // namespace tfd
