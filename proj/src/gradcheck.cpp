// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The TFD Authors

#include "tfd/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "tfd/error.hpp"
#include "tfd/ops.hpp"
#include "tfd/rng.hpp"
#include "tfd/spectral.hpp"
#include "tfd/train.hpp"

namespace tfd {

namespace {

struct Coord {
    std::size_t slot;
    std::size_t index;
};

// Round-robin over slots so every tensor is visited before any repeats.
std::vector<Coord> coordinate_order(const std::vector<std::size_t>& sizes, Rng& rng) {
    std::vector<std::vector<std::size_t>> lists(sizes.size());
    for (std::size_t s = 0; s < sizes.size(); ++s) {
        auto& l = lists[s];
        l.resize(sizes[s]);
        for (std::size_t i = 0; i < l.size(); ++i) l[i] = i;
        for (std::size_t i = l.size(); i > 1; --i) std::swap(l[i - 1], l[rng.below(i)]);
    }
    std::vector<std::size_t> slots(sizes.size());
    for (std::size_t s = 0; s < slots.size(); ++s) slots[s] = s;
    for (std::size_t i = slots.size(); i > 1; --i) std::swap(slots[i - 1], slots[rng.below(i)]);

    std::vector<Coord> out;
    for (std::size_t round = 0;; ++round) {
        bool any = false;
        for (std::size_t s : slots) {
            if (round < lists[s].size()) {
                out.push_back({s, lists[s][round]});
                any = true;
            }
        }
        if (!any) break;
    }
    return out;
}

// Runs the sampled comparison. `eval` returns the loss with coordinate c
// shifted by delta; `analytic` is the recorded gradient at c.
template <class Eval, class Analytic>
GradCheckResult compare(const std::string& name, const std::vector<std::size_t>& sizes, const Eval& eval,
                        const Analytic& analytic, const std::function<double(Coord)>& value,
                        const GradCheckOptions& opt) {
    GradCheckResult res;
    res.name = name;
    Rng rng(opt.seed);
    const std::vector<Coord> order = coordinate_order(sizes, rng);
    const std::size_t target = std::min(order.size(), std::max(opt.coords, sizes.size()));
    for (const Coord& c : order) {
        if (res.checked >= target) break;
        const double h = opt.step * std::max(1.0, std::abs(value(c)));
        const double fp = eval(c, h);
        const double fm = eval(c, -h);
        const double num = (fp - fm) / (2.0 * h);
        const double ana = analytic(c);
        const double abs_err = std::abs(ana - num);
        const double rel_err = abs_err / std::max(std::abs(ana), std::abs(num));
        const bool ok = abs_err <= opt.abs_tol || rel_err <= opt.rel_tol;
        if (!ok) {
            // Non-smooth inside the stencil: the one-sided slopes split, or the
            // estimate itself moves when the step is halved.
            const double f_c = eval(c, 0.0);
            const double up = (fp - f_c) / h;
            const double down = (f_c - fm) / h;
            const double half = (eval(c, h / 2) - eval(c, -h / 2)) / h;
            const bool kink = std::abs(up - down) >= abs_err || std::abs(num - half) >= abs_err / 2;
            if (kink && res.kinks < static_cast<std::size_t>(opt.max_resample)) {
                ++res.kinks;
                continue;
            }
            ++res.failed;
        }
        ++res.checked;
        res.max_abs = std::max(res.max_abs, abs_err);
        if (abs_err > opt.abs_tol) res.max_rel = std::max(res.max_rel, rel_err);
    }
    return res;
}

Tensor random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
    Tensor t(std::move(shape));
    for (double& v : t.mutable_data()) v = rng.uniform(lo, hi);
    return t;
}

// sum(x * r) for a fixed random r, so every output element carries weight.
Tensor project(const Tensor& x, std::uint64_t seed) {
    Rng rng(seed);
    return sum(mul(x, random_tensor(x.shape(), rng)));
}

Tensor project(const Spectrum& s, std::uint64_t seed) { return add(project(s.re, seed), project(s.im, seed + 1)); }

}  // namespace

GradCheckResult check_gradient(const std::string& name, std::vector<Tensor> inputs, const LeafLoss& loss,
                               const GradCheckOptions& options) {
    std::vector<std::size_t> sizes;
    for (const auto& t : inputs) sizes.push_back(t.numel());

    Tape tape;
    std::vector<Tensor> leaves;
    for (const auto& t : inputs) leaves.push_back(tape.watch(t));
    const Tensor l = loss(leaves);
    if (l.numel() != 1) throw ShapeError("gradcheck: loss must be a scalar, got " + l.shape().str());
    tape.backward(l);
    std::vector<std::vector<double>> grads;
    for (const auto& leaf : leaves) {
        auto g = tape.grad(leaf);
        grads.emplace_back(g.begin(), g.end());
    }

    auto eval = [&](Coord c, double delta) {
        std::vector<Tensor> shifted;
        for (const auto& t : inputs) shifted.push_back(t.detach());
        if (delta != 0.0) {
            Tensor copy(shifted[c.slot].shape(), std::vector<double>(inputs[c.slot].data().begin(),
                                                                      inputs[c.slot].data().end()));
            copy.mutable_data()[c.index] += delta;
            shifted[c.slot] = copy;
        }
        return loss(shifted).item();
    };
    auto analytic = [&](Coord c) { return grads[c.slot].empty() ? 0.0 : grads[c.slot][c.index]; };
    auto value = [&](Coord c) { return inputs[c.slot][c.index]; };
    return compare(name, sizes, eval, analytic, value, options);
}

GradCheckResult check_param_gradient(const std::string& name, ParamStore& params,
                                     const std::function<Tensor(Tape*)>& loss, const GradCheckOptions& options) {
    std::vector<Param*> list;
    std::vector<std::size_t> sizes;
    for (Param& p : params) {
        list.push_back(&p);
        sizes.push_back(p.value.numel());
    }
    params.zero_grad();
    {
        Tape tape;
        const Tensor l = loss(&tape);
        if (l.numel() != 1) throw ShapeError("gradcheck: loss must be a scalar, got " + l.shape().str());
        tape.backward(l);
    }
    std::vector<std::vector<double>> grads;
    for (Param* p : list) grads.push_back(p->grad);
    params.zero_grad();

    auto eval = [&](Coord c, double delta) {
        if (delta == 0.0) return loss(nullptr).item();
        Param& p = *list[c.slot];
        const double saved = p.value[c.index];
        p.value.mutable_data()[c.index] = saved + delta;
        const double f = loss(nullptr).item();
        p.value.mutable_data()[c.index] = saved;
        return f;
    };
    auto analytic = [&](Coord c) { return grads[c.slot][c.index]; };
    auto value = [&](Coord c) { return list[c.slot]->value[c.index]; };
    return compare(name, sizes, eval, analytic, value, options);
}

std::vector<GradCheckResult> run_gradient_suite(const ArchConfig& arch, const GradCheckOptions& options) {
    arch.validate();
    std::vector<GradCheckResult> out;
    Rng rng(derive_seed(options.seed, 1));
    std::uint64_t salt = 100;
    auto run = [&](const std::string& name, std::vector<Tensor> inputs, const LeafLoss& fn) {
        GradCheckOptions o = options;
        o.seed = derive_seed(options.seed, salt++);
        out.push_back(check_gradient(name, std::move(inputs), fn, o));
    };
    auto rnd = [&](Shape s, double lo = -1.0, double hi = 1.0) { return random_tensor(std::move(s), rng, lo, hi); };
    const std::uint64_t ps = derive_seed(options.seed, 2);
    using Leaves = std::span<const Tensor>;

    const Shape img{2, 3, 5, 5};
    run("add", {rnd(img), rnd(img)}, [&](Leaves v) { return project(add(v[0], v[1]), ps); });
    run("sub", {rnd(img), rnd(img)}, [&](Leaves v) { return project(sub(v[0], v[1]), ps); });
    run("mul", {rnd(img), rnd(img)}, [&](Leaves v) { return project(mul(v[0], v[1]), ps); });
    run("relu", {rnd(img)}, [&](Leaves v) { return project(relu(v[0]), ps); });
    run("sigmoid", {rnd(img, -4.0, 4.0)}, [&](Leaves v) { return project(sigmoid(v[0]), ps); });
    run("abs", {rnd(img)}, [&](Leaves v) { return project(abs(v[0]), ps); });
    run("scale", {rnd(img)}, [&](Leaves v) { return project(scale(v[0], -1.7), ps); });
    run("add_scalar", {rnd(img)}, [&](Leaves v) { return project(add_scalar(v[0], 0.3), ps); });
    run("reshape", {rnd(img)}, [&](Leaves v) { return project(reshape(v[0], Shape{6, 25}), ps); });
    run("sum", {rnd(img)}, [&](Leaves v) { return scale(sum(mul(v[0], v[0])), 0.5); });
    run("mean", {rnd(img)}, [&](Leaves v) { return mean(mul(v[0], v[0])); });
    run("mean_abs_diff", {rnd(img), rnd(img)}, [&](Leaves v) { return mean_abs_diff(v[0], v[1]); });

    const Shape fmap{2, 4, 6, 6};
    run("conv2d", {rnd(fmap), rnd(Shape{5, 4, 3, 3}), rnd(Shape{5})},
        [&](Leaves v) { return project(conv2d(v[0], v[1], &v[2], 1, 1), ps); });
    run("conv2d.stride2", {rnd(fmap), rnd(Shape{3, 4, 3, 3})},
        [&](Leaves v) { return project(conv2d(v[0], v[1], nullptr, 2, 1), ps); });
    run("conv2d.1x1", {rnd(fmap), rnd(Shape{6, 4, 1, 1}), rnd(Shape{6})},
        [&](Leaves v) { return project(conv2d(v[0], v[1], &v[2], 1, 0), ps); });
    run("depthwise_conv2d", {rnd(fmap), rnd(Shape{4, 1, 3, 3}), rnd(Shape{4})},
        [&](Leaves v) { return project(depthwise_conv2d(v[0], v[1], &v[2]), ps); });
    run("depthwise_conv2d.stride2", {rnd(fmap), rnd(Shape{4, 1, 3, 3})},
        [&](Leaves v) { return project(depthwise_conv2d(v[0], v[1], nullptr, 2, 1), ps); });
    run("depthwise_conv2d.circular", {rnd(fmap), rnd(Shape{4, 1, 3, 3})},
        [&](Leaves v) { return project(depthwise_conv2d(v[0], v[1], nullptr, 1, 1, Padding::circular), ps); });
    run("layer_norm", {rnd(fmap), rnd(Shape{4}), rnd(Shape{4})},
        [&](Leaves v) { return project(layer_norm(v[0], v[1], v[2], 1e-6), ps); });
    run("gap", {rnd(fmap)}, [&](Leaves v) { return project(gap(v[0]), ps); });
    run("scale_channels", {rnd(fmap), rnd(Shape{2, 4, 1, 1})},
        [&](Leaves v) { return project(scale_channels(v[0], v[1]), ps); });
    run("channel_attention", {rnd(fmap), rnd(Shape{2, 4}), rnd(Shape{4, 2})},
        [&](Leaves v) { return project(channel_attention(v[0], v[1], v[2]), ps); });
    run("modulate", {rnd(fmap), rnd(Shape{4, 6, 6})}, [&](Leaves v) { return project(modulate(v[0], v[1]), ps); });
    run("modulate.shared", {rnd(fmap), rnd(Shape{1, 6, 6})},
        [&](Leaves v) { return project(modulate(v[0], v[1]), ps); });
    run("upsample_nearest2x", {rnd(fmap)}, [&](Leaves v) { return project(upsample_nearest2x(v[0]), ps); });
    run("concat_channels", {rnd(fmap), rnd(Shape{2, 2, 6, 6})},
        [&](Leaves v) { return project(concat_channels(v[0], v[1]), ps); });
    run("concat_batch", {rnd(fmap), rnd(Shape{1, 4, 6, 6})}, [&](Leaves v) {
        std::vector<Tensor> parts{v[0], v[1]};
        return project(concat_batch(parts), ps);
    });
    run("take_samples", {rnd(Shape{3, 4, 6, 6})}, [&](Leaves v) {
        const std::vector<int> idx{2, 0, 2};
        return project(take_samples(v[0], idx), ps);
    });
    run("select_samples", {rnd(Shape{3, 4, 6, 6}), rnd(Shape{3, 4, 6, 6})},
        [&](Leaves v) { return project(select_samples({true, false, true}, v[0], v[1]), ps); });
    {
        Rng g(derive_seed(options.seed, 3));
        std::vector<std::size_t> offsets{0};
        std::vector<GatherTap> taps;
        for (int i = 0; i < 120; ++i) {
            const int k = 1 + static_cast<int>(g.below(3));
            for (int j = 0; j < k; ++j) taps.push_back({static_cast<std::size_t>(g.below(100)), g.uniform(-1.0, 1.0)});
            offsets.push_back(taps.size());
        }
        run("weighted_gather", {rnd(Shape{4, 25})},
            [&, offsets, taps](Leaves v) { return project(weighted_gather(v[0], Shape{120}, offsets, taps), ps); });
    }
    run("cross_entropy", {rnd(Shape{60, 2}, -3.0, 3.0)}, [&](Leaves v) {
        std::vector<int> labels;
        for (int i = 0; i < 60; ++i) labels.push_back(i % 3 == 0 ? 1 : 0);
        return cross_entropy(v[0], labels);
    });

    const Shape plane{2, 2, 8, 8};
    const Shape odd{1, 2, 6, 10};
    run("dft2", {rnd(plane)}, [&](Leaves v) { return project(dft2(v[0]), ps); });
    run("dft2.direct", {rnd(odd)}, [&](Leaves v) { return project(dft2(v[0]), ps); });
    run("dft2.power", {rnd(plane)}, [&](Leaves v) {
        Spectrum s = dft2(v[0]);
        return scale(sum(add(mul(s.re, s.re), mul(s.im, s.im))), 1.0 / 64.0);
    });
    run("idft2", {rnd(plane), rnd(plane)}, [&](Leaves v) { return project(idft2(Spectrum{v[0], v[1]}), ps); });
    run("idft2_modulus", {rnd(plane), rnd(plane)},
        [&](Leaves v) { return project(idft2_modulus(Spectrum{v[0], v[1]}), ps); });
    run("spectral_filter.hadamard", {rnd(plane), rnd(Shape{2, 8, 8}), rnd(Shape{2, 8, 8})}, [&](Leaves v) {
        return project(spectral_filter(dft2(v[0]), v[1], v[2], FilterMode::hadamard), ps);
    });
    run("spectral_filter.conv3", {rnd(plane), rnd(Shape{2, 1, 3, 3}), rnd(Shape{2, 1, 3, 3})}, [&](Leaves v) {
        return project(spectral_filter(dft2(v[0]), v[1], v[2], FilterMode::conv3), ps);
    });

    // Model pieces on a narrow copy of the architecture, one per fusion mode.
    for (Fusion f : {Fusion::multiplication, Fusion::addition, Fusion::concatenation}) {
        ArchConfig small = arch;
        small.channels = 8;
        small.reduction_ratio = 4;
        small.feature_size = 8;
        small.fusion = f;
        small.nd = small.sd = small.fd = true;
        TfdModel m(small, derive_seed(options.seed, 4));
        const Tensor h = rnd(Shape{2, 8, 8, 8});
        GradCheckOptions o = options;
        o.seed = derive_seed(options.seed, salt++);
        out.push_back(check_param_gradient("model.denoise." + fusion_name(f), m.params(),
                                           [&](Tape* t) { return project(m.denoise(h, t), ps); }, o));
    }
    {
        ArchConfig small = arch;
        small.channels = 8;
        small.feature_size = 8;
        small.nd = true;
        TfdModel m(small, derive_seed(options.seed, 5));
        const Tensor h = rnd(Shape{2, 8, 8, 8});
        GradCheckOptions o = options;
        o.seed = derive_seed(options.seed, salt++);
        out.push_back(check_param_gradient("model.detect", m.params(),
                                           [&](Tape* t) { return project(m.detect(h, t).logits, ps); }, o));
    }

    // Composite objective: the routed case runs at the given architecture,
    // the identity and detector-off cases on the narrow copy.
    TrainConfig tc;
    struct Case {
        std::string name;
        bool full;
        bool nd;
        double bias;  // pushes the detector toward (positive) or away from routing
        bool gate;
    };
    const std::vector<Case> cases{{"model.total_loss.routed", true, true, 4.0, true},
                                  {"model.total_loss.identity", false, true, -4.0, true},
                                  {"model.total_loss.nd_off", false, false, 0.0, false}};
    for (const Case& k : cases) {
        ArchConfig a = arch;
        if (!k.full) {
            a.channels = 8;
            a.feature_size = 8;
        }
        a.nd = k.nd;
        a.sd = a.fd = true;
        const int S = a.feature_size;
        const int C = a.in_channels;
        const Tensor lr = rnd(Shape{2, C, S, S}, 0.0, 1.0);
        const Tensor hr = rnd(Shape{2, C, S * a.scale, S * a.scale}, 0.0, 1.0);
        const Tensor clean = rnd(Shape{2, C, S, S}, 0.0, 1.0);
        const std::vector<int> labels{1, 0};
        TfdModel m(a, derive_seed(options.seed, 6));
        if (Param* b = m.params().find("tfd.det.fc2.b")) {
            auto d = b->value.mutable_data();
            d[0] = -k.bias;
            d[1] = k.bias;
        }
        const Tensor ref = m.features(clean);
        GradCheckOptions o = options;
        o.seed = derive_seed(options.seed, salt++);
        out.push_back(check_param_gradient(
            k.name, m.params(),
            [&](Tape* t) { return step_loss(m, lr, hr, clean, labels, tc, k.gate, t, &ref).total; }, o));
    }
    return out;
}

}  // namespace tfd
