// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The TFD Authors

#include "tfd/spectral.hpp"

#include <cmath>
#include <numbers>

#include "tfd/error.hpp"
#include "tfd/ops.hpp"

namespace tfd {

namespace fft {

bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

namespace {

using cd = std::complex<double>;

// exp(sign * 2 pi i m / n) for m in [0, n).
struct Twiddles {
    std::vector<double> c, s;

    Twiddles(int n, bool inverse) : c(static_cast<std::size_t>(n)), s(static_cast<std::size_t>(n)) {
        const double sign = inverse ? 1.0 : -1.0;
        for (int m = 0; m < n; ++m) {
            const double ang = sign * 2.0 * std::numbers::pi * static_cast<double>(m) / n;
            c[static_cast<std::size_t>(m)] = std::cos(ang);
            s[static_cast<std::size_t>(m)] = std::sin(ang);
        }
    }
};

void radix2(cd* a, int n, std::ptrdiff_t stride, const Twiddles& tw) {
    for (int i = 1, j = 0; i < n; ++i) {
        int bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i * stride], a[j * stride]);
    }
    for (int len = 2; len <= n; len <<= 1) {
        const int half = len / 2;
        const int step = n / len;
        for (int k = 0; k < half; ++k) {
            const double wr = tw.c[static_cast<std::size_t>(k * step)];
            const double wi = tw.s[static_cast<std::size_t>(k * step)];
            for (int i = 0; i < n; i += len) {
                cd& lo = a[(i + k) * stride];
                cd& hi = a[(i + k + half) * stride];
                const double tr = hi.real() * wr - hi.imag() * wi;
                const double ti = hi.real() * wi + hi.imag() * wr;
                hi = cd(lo.real() - tr, lo.imag() - ti);
                lo = cd(lo.real() + tr, lo.imag() + ti);
            }
        }
    }
}

void direct(cd* a, int n, std::ptrdiff_t stride, const Twiddles& tw, std::vector<cd>& scratch) {
    scratch.resize(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) scratch[static_cast<std::size_t>(j)] = a[j * stride];
    for (int k = 0; k < n; ++k) {
        double re = 0.0, im = 0.0;
        int m = 0;  // k * j mod n
        for (int j = 0; j < n; ++j) {
            const double xr = scratch[static_cast<std::size_t>(j)].real();
            const double xi = scratch[static_cast<std::size_t>(j)].imag();
            const double c = tw.c[static_cast<std::size_t>(m)], sn = tw.s[static_cast<std::size_t>(m)];
            re += xr * c - xi * sn;
            im += xr * sn + xi * c;
            m += k;
            if (m >= n) m -= n;
        }
        a[k * stride] = cd(re, im);
    }
}

void transform1d(cd* a, int n, std::ptrdiff_t stride, const Twiddles& tw, std::vector<cd>& scratch) {
    if (n <= 1) return;
    if (is_pow2(n))
        radix2(a, n, stride, tw);
    else
        direct(a, n, stride, tw, scratch);
}

}  // namespace

void transform2d(std::span<std::complex<double>> plane, int H, int W, bool inverse) {
    if (plane.size() != static_cast<std::size_t>(H) * W) throw ShapeError("fft: plane size mismatch");
    std::vector<cd> scratch;
    const Twiddles tw_w(W, inverse);
    const Twiddles tw_h(H, inverse);
    for (int y = 0; y < H; ++y) transform1d(plane.data() + static_cast<std::size_t>(y) * W, W, 1, tw_w, scratch);
    for (int x = 0; x < W; ++x) transform1d(plane.data() + x, H, W, tw_h, scratch);
}

}  // namespace fft

namespace {

using cd = std::complex<double>;

void require_planes(const Tensor& x, const char* op) {
    if (x.shape().rank() != 4) throw ShapeError(std::string(op) + ": expected N x C x H x W, got " + x.shape().str());
    if (x.h() < 1 || x.w() < 1) throw ShapeError(std::string(op) + ": empty plane " + x.shape().str());
}

// Per-plane complex transform of (re, im) arrays; either may be null (zero).
void transform_planes(const double* re, const double* im, double* out_re, double* out_im, std::size_t planes, int H,
                      int W, bool inverse) {
    const std::size_t HW = static_cast<std::size_t>(H) * W;
    std::vector<cd> buf(HW);
    for (std::size_t p = 0; p < planes; ++p) {
        for (std::size_t i = 0; i < HW; ++i)
            buf[i] = cd(re ? re[p * HW + i] : 0.0, im ? im[p * HW + i] : 0.0);
        fft::transform2d(buf, H, W, inverse);
        for (std::size_t i = 0; i < HW; ++i) {
            if (out_re) out_re[p * HW + i] = buf[i].real();
            if (out_im) out_im[p * HW + i] = buf[i].imag();
        }
    }
}

}  // namespace

Spectrum dft2(const Tensor& x) {
    require_planes(x, "dft2");
    const int H = x.h(), W = x.w();
    const std::size_t planes = static_cast<std::size_t>(x.n()) * x.c();
    Tensor re(x.shape()), im(x.shape());
    transform_planes(x.data().data(), nullptr, re.mutable_data().data(), im.mutable_data().data(), planes, H, W,
                     false);

    // d re[k] / d x[n] = cos(theta), d im[k] / d x[n] = -sin(theta): the
    // adjoint is the unnormalized inverse transform, real part.
    auto re_back = [planes, H, W](std::span<const double> g, std::span<const std::span<double>> gi) {
        std::vector<double> tmp(g.size());
        transform_planes(g.data(), nullptr, tmp.data(), nullptr, planes, H, W, true);
        for (std::size_t i = 0; i < tmp.size(); ++i) gi[0][i] += tmp[i];
    };
    auto im_back = [planes, H, W](std::span<const double> g, std::span<const std::span<double>> gi) {
        std::vector<double> tmp(g.size());
        transform_planes(nullptr, g.data(), tmp.data(), nullptr, planes, H, W, true);
        for (std::size_t i = 0; i < tmp.size(); ++i) gi[0][i] += tmp[i];
    };
    Spectrum s;
    s.re = Tape::record(std::move(re), {&x}, re_back);
    s.im = Tape::record(std::move(im), {&x}, im_back);
    return s;
}

Tensor idft2(const Spectrum& s) {
    require_planes(s.re, "idft2");
    if (s.re.shape() != s.im.shape())
        throw ShapeError("idft2: re " + s.re.shape().str() + " vs im " + s.im.shape().str());
    const int H = s.re.h(), W = s.re.w();
    const std::size_t planes = static_cast<std::size_t>(s.re.n()) * s.re.c();
    const double inv = 1.0 / (static_cast<double>(H) * W);
    Tensor out(s.re.shape());
    auto o = out.mutable_data();
    transform_planes(s.re.data().data(), s.im.data().data(), o.data(), nullptr, planes, H, W, true);
    for (double& v : o) v *= inv;
    return Tape::record(std::move(out), {&s.re, &s.im},
                        [planes, H, W, inv](std::span<const double> g, std::span<const std::span<double>> gi) {
                            std::vector<double> gre(g.size()), gim(g.size());
                            transform_planes(g.data(), nullptr, gre.data(), gim.data(), planes, H, W, false);
                            if (!gi[0].empty())
                                for (std::size_t i = 0; i < g.size(); ++i) gi[0][i] += gre[i] * inv;
                            if (!gi[1].empty())
                                for (std::size_t i = 0; i < g.size(); ++i) gi[1][i] += gim[i] * inv;
                        });
}

Tensor idft2_modulus(const Spectrum& s) {
    require_planes(s.re, "idft2_modulus");
    if (s.re.shape() != s.im.shape())
        throw ShapeError("idft2_modulus: re " + s.re.shape().str() + " vs im " + s.im.shape().str());
    const int H = s.re.h(), W = s.re.w();
    const std::size_t planes = static_cast<std::size_t>(s.re.n()) * s.re.c();
    const double inv = 1.0 / (static_cast<double>(H) * W);
    std::vector<double> zr(s.re.numel()), zi(s.re.numel());
    transform_planes(s.re.data().data(), s.im.data().data(), zr.data(), zi.data(), planes, H, W, true);
    Tensor out(s.re.shape());
    auto o = out.mutable_data();
    for (std::size_t i = 0; i < o.size(); ++i) {
        zr[i] *= inv;
        zi[i] *= inv;
        o[i] = std::hypot(zr[i], zi[i]);
    }
    Tensor mod = out.detach();
    return Tape::record(std::move(out), {&s.re, &s.im},
                        [planes, H, W, inv, zr = std::move(zr), zi = std::move(zi), mod](
                            std::span<const double> g, std::span<const std::span<double>> gi) {
                            const std::size_t n = g.size();
                            std::vector<double> gr(n), gim(n), fr(n), fi(n);
                            for (std::size_t i = 0; i < n; ++i) {
                                const double m = mod[i];
                                gr[i] = m > 0.0 ? g[i] * zr[i] / m : 0.0;
                                gim[i] = m > 0.0 ? g[i] * zi[i] / m : 0.0;
                            }
                            transform_planes(gr.data(), gim.data(), fr.data(), fi.data(), planes, H, W, false);
                            if (!gi[0].empty())
                                for (std::size_t i = 0; i < n; ++i) gi[0][i] += fr[i] * inv;
                            if (!gi[1].empty())
                                for (std::size_t i = 0; i < n; ++i) gi[1][i] += fi[i] * inv;
                        });
}

Spectrum spectral_filter(const Spectrum& s, const Tensor& wr, const Tensor& wi, FilterMode mode) {
    if (s.re.shape() != s.im.shape())
        throw ShapeError("spectral_filter: re " + s.re.shape().str() + " vs im " + s.im.shape().str());
    if (wr.shape() != wi.shape())
        throw ShapeError("spectral_filter: filters " + wr.shape().str() + " vs " + wi.shape().str());
    if (mode == FilterMode::hadamard) return {modulate(s.re, wr), modulate(s.im, wi)};

    const int C = s.re.c();
    const bool ok = (wr.shape().rank() == 3 && wr.shape()[0] == C && wr.shape()[1] == 3 && wr.shape()[2] == 3) ||
                    (wr.shape().rank() == 4 && wr.shape()[0] == C && wr.shape()[1] == 1 && wr.shape()[2] == 3 &&
                     wr.shape()[3] == 3);
    if (!ok)
        throw ShapeError("spectral_filter(conv3): kernels " + wr.shape().str() + " for " + std::to_string(C) +
                         " channels");
    const Shape k{C, 1, 3, 3};
    return {relu(depthwise_conv2d(s.re, reshape(wr, k), nullptr, 1, 1, Padding::circular)),
            relu(depthwise_conv2d(s.im, reshape(wi, k), nullptr, 1, 1, Padding::circular))};
}

double radial_frequency(int u, int v, int H, int W) {
    const int su = u < (H + 1) / 2 ? u : u - H;
    const int sv = v < (W + 1) / 2 ? v : v - W;
    const double fu = static_cast<double>(su) / H;
    const double fv = static_cast<double>(sv) / W;
    return std::sqrt(fu * fu + fv * fv) / std::sqrt(0.5);
}

int radial_bin_index(int u, int v, int H, int W, int bins) {
    if (u == 0 && v == 0) return 0;
    const double r = radial_frequency(u, v, H, W);
    const int k = 1 + static_cast<int>(std::floor(r * (bins - 1)));
    return std::min(bins - 1, std::max(1, k));
}

RadialProfile radial_profile(const Spectrum& s, int bins) {
    if (bins < 2) throw ConfigError("radial_profile: need at least 2 bins");
    if (s.re.shape() != s.im.shape())
        throw ShapeError("radial_profile: re " + s.re.shape().str() + " vs im " + s.im.shape().str());
    require_planes(s.re, "radial_profile");
    const int H = s.re.h(), W = s.re.w();
    const std::size_t planes = static_cast<std::size_t>(s.re.n()) * s.re.c();
    std::vector<int> bin_of(static_cast<std::size_t>(H) * W);
    for (int u = 0; u < H; ++u)
        for (int v = 0; v < W; ++v) bin_of[static_cast<std::size_t>(u) * W + v] = radial_bin_index(u, v, H, W, bins);

    std::vector<double> acc(static_cast<std::size_t>(bins), 0.0), pw(static_cast<std::size_t>(bins), 0.0);
    std::vector<std::size_t> pop(static_cast<std::size_t>(bins), 0);
    const std::size_t HW = bin_of.size();
    for (std::size_t p = 0; p < planes; ++p)
        for (std::size_t i = 0; i < HW; ++i) {
            const double a = s.re[p * HW + i], b = s.im[p * HW + i];
            const auto k = static_cast<std::size_t>(bin_of[i]);
            acc[k] += std::sqrt(a * a + b * b);
            pw[k] += a * a + b * b;
            ++pop[k];
        }
    RadialProfile prof;
    for (int k = 0; k < bins; ++k) {
        const auto kk = static_cast<std::size_t>(k);
        const double center = k == 0 ? 0.0 : (k - 0.5) / (bins - 1);
        const double n = static_cast<double>(pop[kk]);
        prof.bins.push_back({center, pop[kk] ? acc[kk] / n : 0.0, pop[kk] ? pw[kk] / n : 0.0, pop[kk] / planes});
    }
    return prof;
}

Energies parseval_check(const Tensor& x) {
    require_planes(x, "parseval_check");
    Spectrum s = dft2(x.detach());
    double spatial = 0.0, spectral = 0.0;
    for (double v : x.data()) spatial += v * v;
    for (std::size_t i = 0; i < s.re.numel(); ++i) spectral += s.re[i] * s.re[i] + s.im[i] * s.im[i];
    return {spatial, spectral / (static_cast<double>(x.h()) * x.w())};
}

}  // namespace tfd
