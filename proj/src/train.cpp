// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The TFD Authors

#include "tfd/train.hpp"

#include <cmath>
#include <iomanip>
#include <numbers>

#include "tfd/degrade.hpp"
#include "tfd/error.hpp"
#include "tfd/ops.hpp"
#include "tfd/rng.hpp"

namespace tfd {

void TrainConfig::validate() const {
    if (lambda_cls < 0.0 || lambda_feat < 0.0) throw ConfigError("train: loss weights must be non-negative");
    if (!(lr0 >= 0.0)) throw ConfigError("train: lr0 must be non-negative");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("train: betas must lie in [0, 1)");
    if (!(eps_adam > 0.0)) throw ConfigError("train: eps_adam must be positive");
    if (batch < 1) throw ConfigError("train: batch must be >= 1");
    if (iters < 1) throw ConfigError("train: iters must be >= 1");
    if (!(gate_threshold > 0.0 && gate_threshold < 1.0)) throw ConfigError("train: gate_threshold must lie in (0, 1)");
    if (!(ema_decay >= 0.0 && ema_decay < 1.0)) throw ConfigError("train: ema_decay must lie in [0, 1)");
}

Tensor loss_rec(const Tensor& sr, const Tensor& hr) {
    if (sr.shape() != hr.shape()) throw ShapeError("loss_rec: " + sr.shape().str() + " vs " + hr.shape().str());
    return mean_abs_diff(sr, hr);
}

Tensor loss_cls(const Tensor& logits, std::span<const int> labels) { return cross_entropy(logits, labels); }

Tensor loss_feat(const Tensor& h_denoised, const Tensor& h_ref) {
    if (h_denoised.shape() != h_ref.shape())
        throw ShapeError("loss_feat: " + h_denoised.shape().str() + " vs " + h_ref.shape().str());
    return mean_abs_diff(h_denoised, h_ref.detach());
}

Tensor total_loss(const Tensor& rec, const Tensor* cls, const Tensor* feat, const TrainConfig& cfg, bool gate_active,
                  bool sample_is_denoised) {
    Tensor total = rec;
    if (cls && cfg.lambda_cls != 0.0) total = add(total, scale(*cls, cfg.lambda_cls));
    if (feat && gate_active && sample_is_denoised && cfg.lambda_feat != 0.0)
        total = add(total, scale(*feat, cfg.lambda_feat));
    return total;
}

double cosine_lr(const TrainConfig& cfg, std::size_t step) {
    return cfg.lr0 * 0.5 * (1.0 + std::cos(std::numbers::pi * static_cast<double>(step) / cfg.iters));
}

void adam_step(ParamStore& params, TrainState& state, const TrainConfig& cfg) {
    if (state.m.size() != params.size()) {
        state.m.clear();
        state.v.clear();
        for (const Param& p : params) {
            state.m.emplace_back(p.value.numel(), 0.0);
            state.v.emplace_back(p.value.numel(), 0.0);
        }
    }
    ++state.step;
    const double lr = cosine_lr(cfg, state.step);
    const double t = static_cast<double>(state.step);
    const double c1 = 1.0 - std::pow(cfg.beta1, t);
    const double c2 = 1.0 - std::pow(cfg.beta2, t);
    std::size_t k = 0;
    for (Param& p : params) {
        auto& m = state.m[k];
        auto& v = state.v[k];
        ++k;
        auto w = p.value.mutable_data();
        for (std::size_t i = 0; i < w.size(); ++i) {
            const double g = p.grad[i];
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
            const double mh = m[i] / c1, vh = v[i] / c2;
            w[i] -= lr * mh / (std::sqrt(vh) + cfg.eps_adam);
        }
    }
    params.zero_grad();
}

void write_history_csv(std::span<const HistoryRow> rows, std::ostream& out) {
    out << "step,lr,loss_rec,loss_cls,loss_feat,det_acc,gate\n";
    out << std::setprecision(17);
    for (const auto& r : rows)
        out << r.step << ',' << r.lr << ',' << r.loss_rec << ',' << r.loss_cls << ',' << r.loss_feat << ','
            << r.det_acc << ',' << (r.gate ? 1 : 0) << '\n';
}

// ---------------------------------------------------------------------------

namespace {

template <typename Field>
Tensor stack_field(const PatchSet& set, std::span<const int> indices, Field field) {
    std::vector<Tensor> parts;
    parts.reserve(indices.size());
    for (int i : indices) parts.push_back(to_tensor(field(set.patches.at(static_cast<std::size_t>(i)))));
    return stack_images(parts);
}

}  // namespace

Tensor batch_lr(const PatchSet& set, std::span<const int> indices) {
    return stack_field(set, indices, [](const TrainingPatch& p) -> const Image8& { return p.lr; });
}
Tensor batch_hr(const PatchSet& set, std::span<const int> indices) {
    return stack_field(set, indices, [](const TrainingPatch& p) -> const Image8& { return p.hr; });
}
Tensor batch_clean_lr(const PatchSet& set, std::span<const int> indices) {
    return stack_field(set, indices, [](const TrainingPatch& p) -> const Image8& { return p.clean_lr; });
}

StepLoss step_loss(TfdModel& model, const Tensor& lr, const Tensor& hr, const Tensor& clean_lr,
                   std::span<const int> labels, const TrainConfig& cfg, bool gate_active, Tape* tape,
                   const Tensor* frozen_ref) {
    const ArchConfig& arch = model.config();
    StepLoss out;
    out.forward = model.forward(lr, gate_active, tape);
    const ForwardResult& fr = out.forward;
    Tensor rec = loss_rec(fr.sr, hr);
    out.rec = rec.item();
    Tensor cls;
    if (arch.nd) {
        cls = loss_cls(fr.logits, labels);
        out.cls = cls.item();
    }
    Tensor feat;
    const bool feat_on = arch.nd ? gate_active : arch.denoiser_enabled();
    const bool denoised = !fr.denoised.empty();
    if (feat_on && denoised) {
        const Tensor ref = frozen_ref ? take_samples(*frozen_ref, fr.denoised)
                                      : model.features(take_samples(clean_lr, fr.denoised));
        feat = loss_feat(fr.h_denoised, ref);
        out.feat = feat.item();
    }
    out.total = total_loss(rec, arch.nd ? &cls : nullptr, feat.numel() ? &feat : nullptr, cfg, feat_on, denoised);
    return out;
}

TrainResult run_training(const PatchSet& data, TfdModel& model, const TrainConfig& cfg, const StepHook& hook) {
    cfg.validate();
    if (data.patches.empty()) throw DataError("train: empty patch set");
    const ArchConfig& arch = model.config();
    bool has0 = false, has1 = false;
    for (const auto& p : data.patches) (p.label ? has1 : has0) = true;
    if (arch.nd && !(has0 && has1)) throw DataError("train: patch set holds a single noise label; detector cannot learn");

    TrainResult res;
    TrainState& st = res.state;
    Rng rng(cfg.seed);
    const int count = static_cast<int>(data.patches.size());
    std::vector<int> order(static_cast<std::size_t>(count));
    std::size_t cursor = order.size();
    model.params().zero_grad();

    for (int step = 0; step < cfg.iters; ++step) {
        std::vector<int> idx;
        while (static_cast<int>(idx.size()) < cfg.batch) {
            if (cursor == order.size()) {
                for (int i = 0; i < count; ++i) order[static_cast<std::size_t>(i)] = i;
                for (int i = count - 1; i > 0; --i)
                    std::swap(order[static_cast<std::size_t>(i)],
                              order[rng.below(static_cast<std::uint64_t>(i) + 1)]);
                cursor = 0;
            }
            idx.push_back(order[cursor++]);
        }
        std::vector<int> labels;
        for (int i : idx) labels.push_back(data.patches[static_cast<std::size_t>(i)].label);

        Tape tape;
        StepLoss sl = step_loss(model, batch_lr(data, idx), batch_hr(data, idx), batch_clean_lr(data, idx), labels, cfg,
                                st.gate_active, &tape);
        const ForwardResult& fr = sl.forward;
        HistoryRow row;
        row.step = static_cast<std::size_t>(step);
        row.gate = st.gate_active;
        row.loss_rec = sl.rec;
        row.loss_cls = sl.cls;
        row.loss_feat = sl.feat;
        const Tensor& total = sl.total;
        tape.backward(total);

        if (arch.nd) {
            int correct = 0;
            for (std::size_t n = 0; n < labels.size(); ++n)
                correct += ((fr.confidence[n] > 0.5) == (labels[n] == 1)) ? 1 : 0;
            const double acc = static_cast<double>(correct) / static_cast<double>(labels.size());
            st.det_acc_ema = cfg.ema_decay * st.det_acc_ema + (1.0 - cfg.ema_decay) * acc;
        }
        row.det_acc = st.det_acc_ema;
        adam_step(model.params(), st, cfg);
        row.lr = cosine_lr(cfg, st.step);
        res.history.push_back(row);
        if (arch.nd && !st.gate_active && st.det_acc_ema > cfg.gate_threshold) st.gate_active = true;
        if (hook) hook(st.step, model);
    }
    return res;
}

PatchSet build_patch_set(std::span<const Image8> hr_images, const PatchSpec& spec, std::span<const std::string> presets,
                         int scale, std::uint64_t seed) {
    if (presets.empty()) throw ConfigError("patch set: no degradation presets given");
    if (spec.lr_patch < 1 || spec.lr_stride < 1) throw ConfigError("patch set: patch and stride must be positive");
    std::vector<DegradationConfig> configs;
    for (const auto& p : presets) {
        configs.push_back(DegradationConfig::preset(p));
        configs.back().scale = scale;
    }
    DegradationConfig clean = DegradationConfig::preset("clean");
    clean.scale = scale;

    PatchSet set;
    set.scale = scale;
    std::uint64_t index = 0;
    for (const Image8& img : hr_images) {
        for (Image8& hr : extract_patches(img, spec.lr_patch * scale, spec.lr_stride * scale, spec.limit_per_image)) {
            Rng rng(derive_seed(seed, index++));
            const auto& cfg = configs[rng.below(configs.size())];
            DegradeResult d = apply(cfg, hr, rng);
            TrainingPatch p;
            p.lr = std::move(d.lr);
            p.label = d.label;
            p.clean_lr = apply(clean, hr, rng).lr;
            p.preset = cfg.name;
            p.hr = std::move(hr);
            set.patches.push_back(std::move(p));
        }
    }
    return set;
}

}  // namespace tfd
