// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The TFD Authors

#include "tfd/ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

#include "tfd/error.hpp"

namespace tfd {

namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape())
        throw ShapeError(std::string(op) + ": shape mismatch " + a.shape().str() + " vs " +
                         b.shape().str());
}

void require_rank4(const Tensor& a, const char* op) {
    if (a.shape().rank() != 4)
        throw ShapeError(std::string(op) + ": expected N x C x H x W, got " + a.shape().str());
}

double stable_sigmoid(double v) {
    if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
    const double e = std::exp(v);
    return e / (1.0 + e);
}

// Fixed-order dot product with four partial sums.
double dot(const double* a, const double* b, int n) {
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    int i = 0;
    for (; i + 4 <= n; i += 4) {
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
    }
    for (; i < n; ++i) s0 += a[i] * b[i];
    return (s0 + s1) + (s2 + s3);
}

// Output index range [lo, hi] such that o * stride + offset lies in [0, extent).
void valid_range(int offset, int stride, int extent, int out_extent, int& lo, int& hi) {
    lo = offset >= 0 ? 0 : (-offset + stride - 1) / stride;
    const int last = extent - 1 - offset;
    hi = last < 0 ? -1 : std::min(out_extent - 1, last / stride);
}

// Shape of an im2col matrix: rows (ci, ky, kx), columns (oy, ox).
struct ColGeometry {
    int C, H, W, K, stride, pad, Ho, Wo;

    bool direct() const { return K == 1 && stride == 1 && pad == 0; }
};

// Returns a pointer to the column matrix of one sample; a 1x1 stride-1
// convolution reads the input directly.
const double* columns(const double* x, const ColGeometry& g, std::vector<double>& col) {
    if (g.direct()) return x;
    const std::size_t P = static_cast<std::size_t>(g.Ho) * g.Wo;
    col.resize(static_cast<std::size_t>(g.C) * g.K * g.K * P);
    std::size_t r = 0;
    for (int c = 0; c < g.C; ++c) {
        const double* plane = x + static_cast<std::size_t>(c) * g.H * g.W;
        for (int ky = 0; ky < g.K; ++ky)
            for (int kx = 0; kx < g.K; ++kx, ++r) {
                double* dst = col.data() + r * P;
                int oy0, oy1, ox0, ox1;
                valid_range(ky - g.pad, g.stride, g.H, g.Ho, oy0, oy1);
                valid_range(kx - g.pad, g.stride, g.W, g.Wo, ox0, ox1);
                if (ox1 < ox0) oy1 = oy0 - 1;
                for (int oy = 0; oy < g.Ho; ++oy) {
                    double* row = dst + static_cast<std::size_t>(oy) * g.Wo;
                    if (oy < oy0 || oy > oy1) {
                        std::fill(row, row + g.Wo, 0.0);
                        continue;
                    }
                    const double* src = plane + static_cast<std::size_t>(oy * g.stride + ky - g.pad) * g.W;
                    std::fill(row, row + ox0, 0.0);
                    if (g.stride == 1) {
                        std::copy(src + ox0 + kx - g.pad, src + ox1 + 1 + kx - g.pad, row + ox0);
                    } else {
                        for (int ox = ox0; ox <= ox1; ++ox) row[ox] = src[ox * g.stride + kx - g.pad];
                    }
                    std::fill(row + ox1 + 1, row + g.Wo, 0.0);
                }
            }
    }
    return col.data();
}

// Adds a column-matrix gradient back onto the input layout.
void scatter_columns(const double* col, const ColGeometry& g, double* x) {
    const std::size_t P = static_cast<std::size_t>(g.Ho) * g.Wo;
    std::size_t r = 0;
    for (int c = 0; c < g.C; ++c) {
        double* plane = x + static_cast<std::size_t>(c) * g.H * g.W;
        for (int ky = 0; ky < g.K; ++ky)
            for (int kx = 0; kx < g.K; ++kx, ++r) {
                const double* src = col + r * P;
                int oy0, oy1, ox0, ox1;
                valid_range(ky - g.pad, g.stride, g.H, g.Ho, oy0, oy1);
                valid_range(kx - g.pad, g.stride, g.W, g.Wo, ox0, ox1);
                for (int oy = oy0; oy <= oy1; ++oy) {
                    double* dst = plane + static_cast<std::size_t>(oy * g.stride + ky - g.pad) * g.W;
                    const double* row = src + static_cast<std::size_t>(oy) * g.Wo;
                    for (int ox = ox0; ox <= ox1; ++ox) dst[ox * g.stride + kx - g.pad] += row[ox];
                }
            }
    }
}

using v4d = double __attribute__((vector_size(32)));

// C (M x P) += A (M x Kd) * B (Kd x P), all row-major. Each C entry
// accumulates over k in ascending order.
__attribute__((target_clones("avx2", "default")))
void gemm_nn(int M, int P, int Kd, const double* A, const double* B, double* C) {
    constexpr int TM = 4, TP = 8;
    for (int p0 = 0; p0 < P; p0 += TP) {
        const int pp = std::min(TP, P - p0);
        for (int m0 = 0; m0 < M; m0 += TM) {
            const int mm = std::min(TM, M - m0);
            if (mm == TM && pp == TP) {
                double* c0 = C + static_cast<std::size_t>(m0) * P + p0;
                v4d acc[TM][2];
                for (int i = 0; i < TM; ++i) std::memcpy(&acc[i][0], c0 + static_cast<std::size_t>(i) * P, 2 * sizeof(v4d));
                const double* a0 = A + static_cast<std::size_t>(m0) * Kd;
                for (int k = 0; k < Kd; ++k) {
                    const double* b = B + static_cast<std::size_t>(k) * P + p0;
                    v4d b0, b1;
                    std::memcpy(&b0, b, sizeof b0);
                    std::memcpy(&b1, b + 4, sizeof b1);
                    for (int i = 0; i < TM; ++i) {
                        const double a = a0[static_cast<std::size_t>(i) * Kd + k];
                        const v4d av = {a, a, a, a};
                        acc[i][0] += av * b0;
                        acc[i][1] += av * b1;
                    }
                }
                for (int i = 0; i < TM; ++i) std::memcpy(c0 + static_cast<std::size_t>(i) * P, &acc[i][0], 2 * sizeof(v4d));
            } else {
                for (int i = 0; i < mm; ++i)
                    for (int j = 0; j < pp; ++j) {
                        double acc = C[static_cast<std::size_t>(m0 + i) * P + p0 + j];
                        for (int k = 0; k < Kd; ++k)
                            acc += A[static_cast<std::size_t>(m0 + i) * Kd + k] * B[static_cast<std::size_t>(k) * P + p0 + j];
                        C[static_cast<std::size_t>(m0 + i) * P + p0 + j] = acc;
                    }
            }
        }
    }
}

// C (M x N) += A (M x P) * B^T with B (N x P).
__attribute__((target_clones("avx2", "default")))
void gemm_nt(int M, int N, int P, const double* A, const double* B, double* C) {
    constexpr int TM = 2, TN = 4;
    const int P4 = P - P % 4;
    for (int i0 = 0; i0 < M; i0 += TM) {
        const int mi = std::min(TM, M - i0);
        for (int j0 = 0; j0 < N; j0 += TN) {
            const int nj = std::min(TN, N - j0);
            if (mi == TM && nj == TN) {
                v4d acc[TM][TN] = {};
                const double* a[TM];
                const double* b[TN];
                for (int i = 0; i < TM; ++i) a[i] = A + static_cast<std::size_t>(i0 + i) * P;
                for (int j = 0; j < TN; ++j) b[j] = B + static_cast<std::size_t>(j0 + j) * P;
                for (int p = 0; p < P4; p += 4) {
                    v4d av[TM], bv[TN];
                    for (int i = 0; i < TM; ++i) std::memcpy(&av[i], a[i] + p, sizeof(v4d));
                    for (int j = 0; j < TN; ++j) std::memcpy(&bv[j], b[j] + p, sizeof(v4d));
                    for (int i = 0; i < TM; ++i)
                        for (int j = 0; j < TN; ++j) acc[i][j] += av[i] * bv[j];
                }
                for (int i = 0; i < TM; ++i)
                    for (int j = 0; j < TN; ++j) {
                        double s = (acc[i][j][0] + acc[i][j][1]) + (acc[i][j][2] + acc[i][j][3]);
                        for (int p = P4; p < P; ++p) s += a[i][p] * b[j][p];
                        C[static_cast<std::size_t>(i0 + i) * N + j0 + j] += s;
                    }
            } else {
                for (int i = i0; i < i0 + mi; ++i)
                    for (int j = j0; j < j0 + nj; ++j)
                        C[static_cast<std::size_t>(i) * N + j] +=
                            dot(A + static_cast<std::size_t>(i) * P, B + static_cast<std::size_t>(j) * P, P);
            }
        }
    }
}

}  // namespace

// ---------------------------------------------------------------------------
// Elementwise

Tensor add(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "add");
    Tensor out(a.shape());
    auto o = out.mutable_data();
    auto x = a.data(), y = b.data();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = x[i] + y[i];
    return Tape::record(std::move(out), {&a, &b},
                        [](std::span<const double> g, std::span<const std::span<double>> gi) {
                            for (int k = 0; k < 2; ++k)
                                if (!gi[k].empty())
                                    for (std::size_t i = 0; i < g.size(); ++i) gi[k][i] += g[i];
                        });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "sub");
    Tensor out(a.shape());
    auto o = out.mutable_data();
    auto x = a.data(), y = b.data();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = x[i] - y[i];
    return Tape::record(std::move(out), {&a, &b},
                        [](std::span<const double> g, std::span<const std::span<double>> gi) {
                            if (!gi[0].empty())
                                for (std::size_t i = 0; i < g.size(); ++i) gi[0][i] += g[i];
                            if (!gi[1].empty())
                                for (std::size_t i = 0; i < g.size(); ++i) gi[1][i] -= g[i];
                        });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "mul");
    Tensor out(a.shape());
    auto o = out.mutable_data();
    auto x = a.data(), y = b.data();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = x[i] * y[i];
    Tensor av = a.detach(), bv = b.detach();
    return Tape::record(std::move(out), {&a, &b},
                        [av, bv](std::span<const double> g, std::span<const std::span<double>> gi) {
                            auto x = av.data(), y = bv.data();
                            if (!gi[0].empty())
                                for (std::size_t i = 0; i < g.size(); ++i) gi[0][i] += g[i] * y[i];
                            if (!gi[1].empty())
                                for (std::size_t i = 0; i < g.size(); ++i) gi[1][i] += g[i] * x[i];
                        });
}

Tensor relu(const Tensor& a) {
    Tensor out(a.shape());
    auto o = out.mutable_data();
    auto x = a.data();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = x[i] > 0.0 ? x[i] : 0.0;
    Tensor av = a.detach();
    return Tape::record(std::move(out), {&a},
                        [av](std::span<const double> g, std::span<const std::span<double>> gi) {
                            auto x = av.data();
                            // Subgradient 0 at exactly 0.
                            for (std::size_t i = 0; i < g.size(); ++i)
                                if (x[i] > 0.0) gi[0][i] += g[i];
                        });
}

Tensor sigmoid(const Tensor& a) {
    Tensor out(a.shape());
    auto o = out.mutable_data();
    auto x = a.data();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = stable_sigmoid(x[i]);
    Tensor ov = out.detach();
    return Tape::record(std::move(out), {&a},
                        [ov](std::span<const double> g, std::span<const std::span<double>> gi) {
                            auto s = ov.data();
                            for (std::size_t i = 0; i < g.size(); ++i)
                                gi[0][i] += g[i] * s[i] * (1.0 - s[i]);
                        });
}

Tensor abs(const Tensor& a) {
    Tensor out(a.shape());
    auto o = out.mutable_data();
    auto x = a.data();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = std::fabs(x[i]);
    Tensor av = a.detach();
    return Tape::record(std::move(out), {&a},
                        [av](std::span<const double> g, std::span<const std::span<double>> gi) {
                            auto x = av.data();
                            for (std::size_t i = 0; i < g.size(); ++i) {
                                if (x[i] > 0.0)
                                    gi[0][i] += g[i];
                                else if (x[i] < 0.0)
                                    gi[0][i] -= g[i];
                            }
                        });
}

Tensor elementwise(ElementwiseOp op, const Tensor& a, const Tensor* b) {
    const bool binary = op == ElementwiseOp::add || op == ElementwiseOp::sub || op == ElementwiseOp::mul;
    if (binary && !b) throw ConfigError("elementwise: binary op requires two operands");
    if (binary && b->numel() == 1 && a.numel() != 1) {
        // Scalar operand: only constant scalars broadcast.
        if (b->tracked()) throw ShapeError("elementwise: tracked scalar broadcast is not supported");
        const double s = (*b)[0];
        switch (op) {
            case ElementwiseOp::add: return add_scalar(a, s);
            case ElementwiseOp::sub: return add_scalar(a, -s);
            default: return scale(a, s);
        }
    }
    switch (op) {
        case ElementwiseOp::add: return add(a, *b);
        case ElementwiseOp::sub: return sub(a, *b);
        case ElementwiseOp::mul: return mul(a, *b);
        case ElementwiseOp::relu: return relu(a);
        case ElementwiseOp::sigmoid: return sigmoid(a);
        case ElementwiseOp::abs: return abs(a);
    }
    throw ConfigError("elementwise: unknown op");
}

Tensor scale(const Tensor& a, double s) {
    Tensor out(a.shape());
    auto o = out.mutable_data();
    auto x = a.data();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = x[i] * s;
    return Tape::record(std::move(out), {&a},
                        [s](std::span<const double> g, std::span<const std::span<double>> gi) {
                            for (std::size_t i = 0; i < g.size(); ++i) gi[0][i] += g[i] * s;
                        });
}

Tensor add_scalar(const Tensor& a, double s) {
    Tensor out(a.shape());
    auto o = out.mutable_data();
    auto x = a.data();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = x[i] + s;
    return Tape::record(std::move(out), {&a},
                        [](std::span<const double> g, std::span<const std::span<double>> gi) {
                            for (std::size_t i = 0; i < g.size(); ++i) gi[0][i] += g[i];
                        });
}

Tensor reshape(const Tensor& a, Shape shape) {
    if (shape.numel() != a.numel())
        throw ShapeError("reshape: " + a.shape().str() + " cannot become " + shape.str());
    Tensor out = a.detach();
    out.shape_ = std::move(shape);
    return Tape::record(std::move(out), {&a},
                        [](std::span<const double> g, std::span<const std::span<double>> gi) {
                            for (std::size_t i = 0; i < g.size(); ++i) gi[0][i] += g[i];
                        });
}

// ---------------------------------------------------------------------------
// Reductions

Tensor sum(const Tensor& a) {
    double s = 0.0;
    for (double v : a.data()) s += v;
    return Tape::record(Tensor::scalar(s), {&a},
                        [](std::span<const double> g, std::span<const std::span<double>> gi) {
                            for (double& v : gi[0]) v += g[0];
                        });
}

Tensor mean(const Tensor& a) {
    double s = 0.0;
    for (double v : a.data()) s += v;
    const double inv = 1.0 / static_cast<double>(a.numel());
    return Tape::record(Tensor::scalar(s * inv), {&a},
                        [inv](std::span<const double> g, std::span<const std::span<double>> gi) {
                            for (double& v : gi[0]) v += g[0] * inv;
                        });
}

Tensor mean_abs_diff(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "mean_abs_diff");
    return mean(abs(sub(a, b)));
}

// ---------------------------------------------------------------------------
// Convolutions

Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor* bias, int stride, int pad) {
    require_rank4(x, "conv2d");
    if (w.shape().rank() != 4)
        throw ShapeError("conv2d: weight must be Cout x Cin x k x k, got " + w.shape().str());
    const int N = x.n(), Cin = x.c(), H = x.h(), W = x.w();
    const int Cout = w.shape()[0], K = w.shape()[2];
    if (w.shape()[1] != Cin || w.shape()[3] != K)
        throw ShapeError("conv2d: input " + x.shape().str() + " incompatible with weight " +
                         w.shape().str());
    if (bias && (bias->numel() != static_cast<std::size_t>(Cout)))
        throw ShapeError("conv2d: bias " + bias->shape().str() + " for " + std::to_string(Cout) +
                         " output channels");
    if (stride < 1 || pad < 0) throw ConfigError("conv2d: stride must be >= 1 and pad >= 0");
    const int Ho = (H + 2 * pad - K) / stride + 1;
    const int Wo = (W + 2 * pad - K) / stride + 1;
    if (H + 2 * pad < K || W + 2 * pad < K || Ho <= 0 || Wo <= 0)
        throw ShapeError("conv2d: kernel " + w.shape().str() + " larger than padded input " +
                         x.shape().str());

    const ColGeometry geo{Cin, H, W, K, stride, pad, Ho, Wo};
    const int R = Cin * K * K;
    const int P = Ho * Wo;
    const std::size_t plane_in = static_cast<std::size_t>(Cin) * H * W;
    const std::size_t plane_out = static_cast<std::size_t>(Cout) * P;

    Tensor out(Shape{N, Cout, Ho, Wo});
    {
        auto o = out.mutable_data();
        std::vector<double> col;
        for (int n = 0; n < N; ++n) {
            double* op = o.data() + static_cast<std::size_t>(n) * plane_out;
            if (bias)
                for (int co = 0; co < Cout; ++co)
                    std::fill(op + static_cast<std::size_t>(co) * P, op + static_cast<std::size_t>(co + 1) * P,
                              (*bias)[static_cast<std::size_t>(co)]);
            const double* b = columns(x.data().data() + static_cast<std::size_t>(n) * plane_in, geo, col);
            gemm_nn(Cout, P, R, w.data().data(), b, op);
        }
    }

    Tensor xv = x.detach(), wv_t = w.detach();
    const bool has_bias = bias != nullptr;
    std::vector<const Tensor*> inputs{&x, &w};
    if (bias) inputs.push_back(bias);
    return Tape::record(
        std::move(out), inputs,
        [xv, wv_t, has_bias, N, Cout, R, P, plane_in, plane_out, geo](std::span<const double> g,
                                                                      std::span<const std::span<double>> gi) {
            if (has_bias && !gi[2].empty()) {
                for (int co = 0; co < Cout; ++co) {
                    double s = 0.0;
                    for (int n = 0; n < N; ++n) {
                        const double* gp = g.data() + static_cast<std::size_t>(n) * plane_out +
                                           static_cast<std::size_t>(co) * P;
                        for (int i = 0; i < P; ++i) s += gp[i];
                    }
                    gi[2][static_cast<std::size_t>(co)] += s;
                }
            }
            std::vector<double> col;
            if (!gi[1].empty()) {
                for (int n = 0; n < N; ++n) {
                    const double* b = columns(xv.data().data() + static_cast<std::size_t>(n) * plane_in, geo, col);
                    gemm_nt(Cout, R, P, g.data() + static_cast<std::size_t>(n) * plane_out, b, gi[1].data());
                }
            }
            if (!gi[0].empty()) {
                std::vector<double> wt(static_cast<std::size_t>(R) * Cout);
                auto w = wv_t.data();
                for (int co = 0; co < Cout; ++co)
                    for (int r = 0; r < R; ++r)
                        wt[static_cast<std::size_t>(r) * Cout + co] = w[static_cast<std::size_t>(co) * R + r];
                std::vector<double> gcol;
                for (int n = 0; n < N; ++n) {
                    double* gx = gi[0].data() + static_cast<std::size_t>(n) * plane_in;
                    if (geo.direct()) {
                        gemm_nn(R, P, Cout, wt.data(), g.data() + static_cast<std::size_t>(n) * plane_out, gx);
                        continue;
                    }
                    gcol.assign(static_cast<std::size_t>(R) * P, 0.0);
                    gemm_nn(R, P, Cout, wt.data(), g.data() + static_cast<std::size_t>(n) * plane_out, gcol.data());
                    scatter_columns(gcol.data(), geo, gx);
                }
            }
        });
}

Tensor depthwise_conv2d(const Tensor& x, const Tensor& w, const Tensor* bias, int stride, int pad,
                        Padding mode) {
    require_rank4(x, "depthwise_conv2d");
    const int N = x.n(), C = x.c(), H = x.h(), W = x.w();
    if (w.shape().rank() != 4 || w.shape()[0] != C || w.shape()[1] != 1 || w.shape()[2] != w.shape()[3])
        throw ShapeError("depthwise_conv2d: kernel " + w.shape().str() + " does not match input " +
                         x.shape().str());
    if (bias && bias->numel() != static_cast<std::size_t>(C))
        throw ShapeError("depthwise_conv2d: bias " + bias->shape().str() + " for " + std::to_string(C) +
                         " channels");
    if (stride < 1 || pad < 0) throw ConfigError("depthwise_conv2d: stride must be >= 1 and pad >= 0");
    const int K = w.shape()[2];
    const int Ho = (H + 2 * pad - K) / stride + 1;
    const int Wo = (W + 2 * pad - K) / stride + 1;
    if (H + 2 * pad < K || W + 2 * pad < K)
        throw ShapeError("depthwise_conv2d: kernel larger than padded input " + x.shape().str());
    const bool circular = mode == Padding::circular;

    auto wrap = [](int i, int n) { return ((i % n) + n) % n; };

    Tensor out(Shape{N, C, Ho, Wo});
    {
        auto o = out.mutable_data();
        auto in = x.data();
        auto wt = w.data();
        for (int n = 0; n < N; ++n)
            for (int c = 0; c < C; ++c) {
                const double* ip = in.data() + (static_cast<std::size_t>(n) * C + c) * H * W;
                double* op = o.data() + (static_cast<std::size_t>(n) * C + c) * Ho * Wo;
                if (bias) std::fill(op, op + static_cast<std::size_t>(Ho) * Wo, (*bias)[static_cast<std::size_t>(c)]);
                for (int ky = 0; ky < K; ++ky)
                    for (int kx = 0; kx < K; ++kx) {
                        const double wv = wt[(static_cast<std::size_t>(c) * K + ky) * K + kx];
                        if (circular) {
                            for (int oy = 0; oy < Ho; ++oy) {
                                const int iy = wrap(oy * stride + ky - pad, H);
                                for (int ox = 0; ox < Wo; ++ox)
                                    op[oy * Wo + ox] += wv * ip[iy * W + wrap(ox * stride + kx - pad, W)];
                            }
                        } else {
                            int oy0, oy1, ox0, ox1;
                            valid_range(ky - pad, stride, H, Ho, oy0, oy1);
                            valid_range(kx - pad, stride, W, Wo, ox0, ox1);
                            for (int oy = oy0; oy <= oy1; ++oy) {
                                const double* irow = ip + (oy * stride + ky - pad) * W;
                                double* orow = op + oy * Wo;
                                for (int ox = ox0; ox <= ox1; ++ox) orow[ox] += wv * irow[ox * stride + kx - pad];
                            }
                        }
                    }
            }
    }

    Tensor xv = x.detach(), wv_t = w.detach();
    const bool has_bias = bias != nullptr;
    std::vector<const Tensor*> inputs{&x, &w};
    if (bias) inputs.push_back(bias);
    return Tape::record(
        std::move(out), inputs,
        [xv, wv_t, has_bias, N, C, H, W, K, Ho, Wo, stride, pad, circular, wrap](
            std::span<const double> g, std::span<const std::span<double>> gi) {
            auto in = xv.data();
            auto wt = wv_t.data();
            for (int c = 0; c < C; ++c) {
                double gb = 0.0;
                for (int n = 0; n < N; ++n) {
                    const double* ip = in.data() + (static_cast<std::size_t>(n) * C + c) * H * W;
                    const double* gp = g.data() + (static_cast<std::size_t>(n) * C + c) * Ho * Wo;
                    double* gxp = gi[0].empty() ? nullptr : gi[0].data() + (static_cast<std::size_t>(n) * C + c) * H * W;
                    for (int i = 0; i < Ho * Wo; ++i) gb += gp[i];
                    for (int ky = 0; ky < K; ++ky)
                        for (int kx = 0; kx < K; ++kx) {
                            const std::size_t widx = (static_cast<std::size_t>(c) * K + ky) * K + kx;
                            const double wv = wt[widx];
                            double acc = 0.0;
                            if (circular) {
                                for (int oy = 0; oy < Ho; ++oy) {
                                    const int iy = wrap(oy * stride + ky - pad, H);
                                    for (int ox = 0; ox < Wo; ++ox) {
                                        const int ix = wrap(ox * stride + kx - pad, W);
                                        acc += gp[oy * Wo + ox] * ip[iy * W + ix];
                                        if (gxp) gxp[iy * W + ix] += wv * gp[oy * Wo + ox];
                                    }
                                }
                            } else {
                                int oy0, oy1, ox0, ox1;
                                valid_range(ky - pad, stride, H, Ho, oy0, oy1);
                                valid_range(kx - pad, stride, W, Wo, ox0, ox1);
                                for (int oy = oy0; oy <= oy1; ++oy) {
                                    const int iy = oy * stride + ky - pad;
                                    for (int ox = ox0; ox <= ox1; ++ox) {
                                        const int ix = ox * stride + kx - pad;
                                        acc += gp[oy * Wo + ox] * ip[iy * W + ix];
                                        if (gxp) gxp[iy * W + ix] += wv * gp[oy * Wo + ox];
                                    }
                                }
                            }
                            if (!gi[1].empty()) gi[1][widx] += acc;
                        }
                }
                if (has_bias && !gi[2].empty()) gi[2][static_cast<std::size_t>(c)] += gb;
            }
        });
}

// ---------------------------------------------------------------------------
// Normalization and attention

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
    require_rank4(x, "layer_norm");
    if (eps <= 0.0) throw ConfigError("layer_norm: eps must be positive");
    const int N = x.n(), C = x.c();
    const std::size_t HW = static_cast<std::size_t>(x.h()) * x.w();
    if (gamma.numel() != static_cast<std::size_t>(C) || beta.numel() != static_cast<std::size_t>(C))
        throw ShapeError("layer_norm: affine parameters " + gamma.shape().str() + "/" + beta.shape().str() +
                         " for input " + x.shape().str());
    const std::size_t M = static_cast<std::size_t>(C) * HW;

    std::vector<double> xhat(x.numel());
    std::vector<double> inv_std(static_cast<std::size_t>(N));
    Tensor out(x.shape());
    auto o = out.mutable_data();
    auto in = x.data();
    for (int n = 0; n < N; ++n) {
        const double* p = in.data() + n * M;
        double mu = 0.0;
        for (std::size_t i = 0; i < M; ++i) mu += p[i];
        mu /= static_cast<double>(M);
        double var = 0.0;
        for (std::size_t i = 0; i < M; ++i) var += (p[i] - mu) * (p[i] - mu);
        var /= static_cast<double>(M);
        const double is = 1.0 / std::sqrt(var + eps);
        inv_std[static_cast<std::size_t>(n)] = is;
        for (int c = 0; c < C; ++c)
            for (std::size_t i = 0; i < HW; ++i) {
                const std::size_t k = n * M + c * HW + i;
                xhat[k] = (in[k] - mu) * is;
                o[k] = gamma[static_cast<std::size_t>(c)] * xhat[k] + beta[static_cast<std::size_t>(c)];
            }
    }

    auto saved = std::make_shared<std::vector<double>>(std::move(xhat));
    Tensor gv = gamma.detach();
    return Tape::record(
        std::move(out), {&x, &gamma, &beta},
        [saved, inv_std, gv, N, C, HW, M](std::span<const double> g, std::span<const std::span<double>> gi) {
            const auto& xh = *saved;
            for (int n = 0; n < N; ++n) {
                double sum_gx = 0.0, sum_gx_xh = 0.0;
                for (int c = 0; c < C; ++c) {
                    const double gc = gv[static_cast<std::size_t>(c)];
                    double gsum = 0.0, gxs = 0.0;
                    for (std::size_t i = 0; i < HW; ++i) {
                        const std::size_t k = n * M + c * HW + i;
                        gsum += g[k];
                        gxs += g[k] * xh[k];
                        const double gxhat = g[k] * gc;
                        sum_gx += gxhat;
                        sum_gx_xh += gxhat * xh[k];
                    }
                    if (!gi[1].empty()) gi[1][static_cast<std::size_t>(c)] += gxs;
                    if (!gi[2].empty()) gi[2][static_cast<std::size_t>(c)] += gsum;
                }
                if (gi[0].empty()) continue;
                const double is = inv_std[static_cast<std::size_t>(n)];
                const double m = static_cast<double>(M);
                for (int c = 0; c < C; ++c) {
                    const double gc = gv[static_cast<std::size_t>(c)];
                    for (std::size_t i = 0; i < HW; ++i) {
                        const std::size_t k = n * M + c * HW + i;
                        const double gxhat = g[k] * gc;
                        gi[0][k] += is * (gxhat - sum_gx / m - xh[k] * sum_gx_xh / m);
                    }
                }
            }
        });
}

Tensor gap(const Tensor& x) {
    require_rank4(x, "gap");
    const int N = x.n(), C = x.c();
    const std::size_t HW = static_cast<std::size_t>(x.h()) * x.w();
    if (HW == 0) throw ShapeError("gap: empty spatial extent " + x.shape().str());
    Tensor out(Shape{N, C, 1, 1});
    auto o = out.mutable_data();
    auto in = x.data();
    for (std::size_t nc = 0; nc < static_cast<std::size_t>(N) * C; ++nc) {
        double s = 0.0;
        for (std::size_t i = 0; i < HW; ++i) s += in[nc * HW + i];
        o[nc] = s / static_cast<double>(HW);
    }
    const double inv = 1.0 / static_cast<double>(HW);
    return Tape::record(std::move(out), {&x},
                        [HW, inv](std::span<const double> g, std::span<const std::span<double>> gi) {
                            for (std::size_t nc = 0; nc < g.size(); ++nc)
                                for (std::size_t i = 0; i < HW; ++i) gi[0][nc * HW + i] += g[nc] * inv;
                        });
}

Tensor scale_channels(const Tensor& x, const Tensor& s) {
    require_rank4(x, "scale_channels");
    const int N = x.n(), C = x.c();
    if (s.numel() != static_cast<std::size_t>(N) * C)
        throw ShapeError("scale_channels: scale " + s.shape().str() + " for input " + x.shape().str());
    const std::size_t HW = static_cast<std::size_t>(x.h()) * x.w();
    Tensor out(x.shape());
    auto o = out.mutable_data();
    auto in = x.data();
    for (std::size_t nc = 0; nc < static_cast<std::size_t>(N) * C; ++nc)
        for (std::size_t i = 0; i < HW; ++i) o[nc * HW + i] = in[nc * HW + i] * s[nc];
    Tensor xv = x.detach(), sv = s.detach();
    return Tape::record(std::move(out), {&x, &s},
                        [xv, sv, HW](std::span<const double> g, std::span<const std::span<double>> gi) {
                            auto in = xv.data();
                            for (std::size_t nc = 0; nc < sv.numel(); ++nc) {
                                double acc = 0.0;
                                for (std::size_t i = 0; i < HW; ++i) {
                                    const std::size_t k = nc * HW + i;
                                    if (!gi[0].empty()) gi[0][k] += g[k] * sv[nc];
                                    acc += g[k] * in[k];
                                }
                                if (!gi[1].empty()) gi[1][nc] += acc;
                            }
                        });
}

Tensor channel_attention(const Tensor& x, const Tensor& w1, const Tensor& w2) {
    require_rank4(x, "channel_attention");
    const int C = x.c();
    if (w1.shape().rank() != 2 || w2.shape().rank() != 2)
        throw ShapeError("channel_attention: weights must be rank 2, got " + w1.shape().str() + " and " +
                         w2.shape().str());
    const int hidden = w1.shape()[0];
    if (hidden <= 0 || C % hidden != 0)
        throw ConfigError("channel_attention: reduction does not divide " + std::to_string(C) + " channels");
    if (w1.shape()[1] != C || w2.shape()[0] != C || w2.shape()[1] != hidden)
        throw ShapeError("channel_attention: weights " + w1.shape().str() + " / " + w2.shape().str() +
                         " for " + std::to_string(C) + " channels");
    Tensor pooled = gap(x);
    Tensor z = relu(conv2d(pooled, reshape(w1, Shape{hidden, C, 1, 1}), nullptr, 1, 0));
    Tensor s = sigmoid(conv2d(z, reshape(w2, Shape{C, hidden, 1, 1}), nullptr, 1, 0));
    return scale_channels(x, s);
}

Tensor modulate(const Tensor& x, const Tensor& w) {
    require_rank4(x, "modulate");
    const int N = x.n(), C = x.c(), H = x.h(), W = x.w();
    if (w.shape().rank() != 3 || (w.shape()[0] != C && w.shape()[0] != 1) || w.shape()[1] != H ||
        w.shape()[2] != W)
        throw ShapeError("modulate: filter " + w.shape().str() + " for input " + x.shape().str());
    const bool shared = w.shape()[0] == 1 && C != 1;
    const std::size_t HW = static_cast<std::size_t>(H) * W;
    Tensor out(x.shape());
    auto o = out.mutable_data();
    auto in = x.data();
    auto wt = w.data();
    for (int n = 0; n < N; ++n)
        for (int c = 0; c < C; ++c) {
            const std::size_t base = (static_cast<std::size_t>(n) * C + c) * HW;
            const std::size_t wbase = shared ? 0 : static_cast<std::size_t>(c) * HW;
            for (std::size_t i = 0; i < HW; ++i) o[base + i] = in[base + i] * wt[wbase + i];
        }
    Tensor xv = x.detach(), wv = w.detach();
    return Tape::record(std::move(out), {&x, &w},
                        [xv, wv, N, C, HW, shared](std::span<const double> g, std::span<const std::span<double>> gi) {
                            auto in = xv.data();
                            auto wt = wv.data();
                            for (int n = 0; n < N; ++n)
                                for (int c = 0; c < C; ++c) {
                                    const std::size_t base = (static_cast<std::size_t>(n) * C + c) * HW;
                                    const std::size_t wbase = shared ? 0 : static_cast<std::size_t>(c) * HW;
                                    for (std::size_t i = 0; i < HW; ++i) {
                                        if (!gi[0].empty()) gi[0][base + i] += g[base + i] * wt[wbase + i];
                                        if (!gi[1].empty()) gi[1][wbase + i] += g[base + i] * in[base + i];
                                    }
                                }
                        });
}

// ---------------------------------------------------------------------------
// Layout

Tensor upsample_nearest2x(const Tensor& x) {
    require_rank4(x, "upsample_nearest2x");
    const int N = x.n(), C = x.c(), H = x.h(), W = x.w();
    Tensor out(Shape{N, C, 2 * H, 2 * W});
    auto o = out.mutable_data();
    auto in = x.data();
    for (std::size_t nc = 0; nc < static_cast<std::size_t>(N) * C; ++nc)
        for (int y = 0; y < 2 * H; ++y)
            for (int xx = 0; xx < 2 * W; ++xx)
                o[(nc * 2 * H + y) * 2 * W + xx] = in[(nc * H + y / 2) * W + xx / 2];
    return Tape::record(std::move(out), {&x},
                        [N, C, H, W](std::span<const double> g, std::span<const std::span<double>> gi) {
                            for (std::size_t nc = 0; nc < static_cast<std::size_t>(N) * C; ++nc)
                                for (int y = 0; y < 2 * H; ++y)
                                    for (int xx = 0; xx < 2 * W; ++xx)
                                        gi[0][(nc * H + y / 2) * W + xx / 2] += g[(nc * 2 * H + y) * 2 * W + xx];
                        });
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
    require_rank4(a, "concat_channels");
    require_rank4(b, "concat_channels");
    if (a.n() != b.n() || a.h() != b.h() || a.w() != b.w())
        throw ShapeError("concat_channels: " + a.shape().str() + " vs " + b.shape().str());
    const int N = a.n(), Ca = a.c(), Cb = b.c();
    const std::size_t HW = static_cast<std::size_t>(a.h()) * a.w();
    Tensor out(Shape{N, Ca + Cb, a.h(), a.w()});
    auto o = out.mutable_data();
    for (int n = 0; n < N; ++n) {
        std::copy_n(a.data().data() + n * Ca * HW, Ca * HW, o.data() + n * (Ca + Cb) * HW);
        std::copy_n(b.data().data() + n * Cb * HW, Cb * HW, o.data() + (n * (Ca + Cb) + Ca) * HW);
    }
    return Tape::record(std::move(out), {&a, &b},
                        [N, Ca, Cb, HW](std::span<const double> g, std::span<const std::span<double>> gi) {
                            for (int n = 0; n < N; ++n) {
                                const double* src = g.data() + n * (Ca + Cb) * HW;
                                if (!gi[0].empty())
                                    for (std::size_t i = 0; i < Ca * HW; ++i) gi[0][n * Ca * HW + i] += src[i];
                                if (!gi[1].empty())
                                    for (std::size_t i = 0; i < Cb * HW; ++i)
                                        gi[1][n * Cb * HW + i] += src[Ca * HW + i];
                            }
                        });
}

Tensor concat_batch(std::span<const Tensor> parts) {
    if (parts.empty()) throw ShapeError("concat_batch: no inputs");
    std::vector<int> dims = parts[0].shape().dims();
    if (dims.empty()) throw ShapeError("concat_batch: rank-0 input");
    int total = 0;
    for (const Tensor& p : parts) {
        auto d = p.shape().dims();
        if (d.size() != dims.size() || !std::equal(d.begin() + 1, d.end(), dims.begin() + 1))
            throw ShapeError("concat_batch: " + p.shape().str() + " vs " + parts[0].shape().str());
        total += d[0];
    }
    dims[0] = total;
    Tensor out{Shape(dims)};
    auto o = out.mutable_data();
    std::vector<std::size_t> sizes;
    std::size_t off = 0;
    std::vector<const Tensor*> inputs;
    for (const Tensor& p : parts) {
        std::copy(p.data().begin(), p.data().end(), o.begin() + static_cast<std::ptrdiff_t>(off));
        off += p.numel();
        sizes.push_back(p.numel());
        inputs.push_back(&p);
    }
    return Tape::record(std::move(out), inputs,
                        [sizes](std::span<const double> g, std::span<const std::span<double>> gi) {
                            std::size_t off = 0;
                            for (std::size_t k = 0; k < sizes.size(); ++k) {
                                if (!gi[k].empty())
                                    for (std::size_t i = 0; i < sizes[k]; ++i) gi[k][i] += g[off + i];
                                off += sizes[k];
                            }
                        });
}

Tensor take_samples(const Tensor& x, std::span<const int> indices) {
    if (x.shape().rank() < 1) throw ShapeError("take_samples: rank-0 input");
    std::vector<int> dims = x.shape().dims();
    const std::size_t row = x.numel() / static_cast<std::size_t>(std::max(1, dims[0]));
    for (int i : indices)
        if (i < 0 || i >= dims[0]) throw ShapeError("take_samples: index out of range for " + x.shape().str());
    dims[0] = static_cast<int>(indices.size());
    Tensor out{Shape(dims)};
    auto o = out.mutable_data();
    for (std::size_t k = 0; k < indices.size(); ++k)
        std::copy_n(x.data().data() + static_cast<std::size_t>(indices[k]) * row, row, o.data() + k * row);
    std::vector<int> idx(indices.begin(), indices.end());
    return Tape::record(std::move(out), {&x},
                        [idx, row](std::span<const double> g, std::span<const std::span<double>> gi) {
                            for (std::size_t k = 0; k < idx.size(); ++k)
                                for (std::size_t i = 0; i < row; ++i)
                                    gi[0][static_cast<std::size_t>(idx[k]) * row + i] += g[k * row + i];
                        });
}

Tensor select_samples(const std::vector<bool>& use_a, const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "select_samples");
    if (a.shape().rank() < 1 || use_a.size() != static_cast<std::size_t>(a.shape()[0]))
        throw ShapeError("select_samples: mask of " + std::to_string(use_a.size()) + " for " + a.shape().str());
    const std::size_t row = use_a.empty() ? 0 : a.numel() / use_a.size();
    Tensor out(a.shape());
    auto o = out.mutable_data();
    for (std::size_t n = 0; n < use_a.size(); ++n) {
        const Tensor& src = use_a[n] ? a : b;
        std::copy_n(src.data().data() + n * row, row, o.data() + n * row);
    }
    return Tape::record(std::move(out), {&a, &b},
                        [use_a, row](std::span<const double> g, std::span<const std::span<double>> gi) {
                            for (std::size_t n = 0; n < use_a.size(); ++n) {
                                auto& dst = gi[use_a[n] ? 0 : 1];
                                if (dst.empty()) continue;
                                for (std::size_t i = 0; i < row; ++i) dst[n * row + i] += g[n * row + i];
                            }
                        });
}

Tensor weighted_gather(const Tensor& src, Shape out_shape, std::span<const std::size_t> offsets,
                       std::span<const GatherTap> taps) {
    const std::size_t count = out_shape.numel();
    if (offsets.size() != count + 1) throw ShapeError("weighted_gather: offsets do not match output " + out_shape.str());
    Tensor out(std::move(out_shape));
    auto o = out.mutable_data();
    auto s = src.data();
    for (std::size_t i = 0; i < count; ++i) {
        double acc = 0.0;
        for (std::size_t t = offsets[i]; t < offsets[i + 1]; ++t) {
            if (taps[t].src >= s.size()) throw ShapeError("weighted_gather: tap outside " + src.shape().str());
            acc += taps[t].weight * s[taps[t].src];
        }
        o[i] = acc;
    }
    std::vector<std::size_t> off(offsets.begin(), offsets.end());
    std::vector<GatherTap> tp(taps.begin(), taps.end());
    return Tape::record(std::move(out), {&src},
                        [off = std::move(off), tp = std::move(tp)](std::span<const double> g,
                                                                   std::span<const std::span<double>> gi) {
                            for (std::size_t i = 0; i + 1 < off.size(); ++i)
                                for (std::size_t t = off[i]; t < off[i + 1]; ++t)
                                    gi[0][tp[t].src] += tp[t].weight * g[i];
                        });
}

// ---------------------------------------------------------------------------
// Classification

std::vector<double> softmax_rows(const Tensor& logits) {
    if (logits.shape().rank() != 2) throw ShapeError("softmax_rows: expected N x K, got " + logits.shape().str());
    const int N = logits.shape()[0], K = logits.shape()[1];
    std::vector<double> p(logits.numel());
    for (int n = 0; n < N; ++n) {
        double mx = logits[static_cast<std::size_t>(n) * K];
        for (int k = 1; k < K; ++k) mx = std::max(mx, logits[static_cast<std::size_t>(n) * K + k]);
        double z = 0.0;
        for (int k = 0; k < K; ++k) {
            const std::size_t i = static_cast<std::size_t>(n) * K + k;
            p[i] = std::exp(logits[i] - mx);
            z += p[i];
        }
        for (int k = 0; k < K; ++k) p[static_cast<std::size_t>(n) * K + k] /= z;
    }
    return p;
}

Tensor cross_entropy(const Tensor& logits, std::span<const int> labels) {
    if (logits.shape().rank() != 2) throw ShapeError("cross_entropy: expected N x K, got " + logits.shape().str());
    const int N = logits.shape()[0], K = logits.shape()[1];
    if (labels.size() != static_cast<std::size_t>(N))
        throw ShapeError("cross_entropy: " + std::to_string(labels.size()) + " labels for " + logits.shape().str());
    for (int l : labels)
        if (l < 0 || l >= K) throw ConfigError("cross_entropy: label out of range");
    double loss = 0.0;
    for (int n = 0; n < N; ++n) {
        const double* row = logits.data().data() + static_cast<std::size_t>(n) * K;
        const double mx = *std::max_element(row, row + K);
        double z = 0.0;
        for (int k = 0; k < K; ++k) z += std::exp(row[k] - mx);
        loss += mx + std::log(z) - row[labels[static_cast<std::size_t>(n)]];
    }
    loss /= N;
    auto probs = softmax_rows(logits.detach());
    std::vector<int> lab(labels.begin(), labels.end());
    return Tape::record(Tensor::scalar(loss), {&logits},
                        [probs, lab, N, K](std::span<const double> g, std::span<const std::span<double>> gi) {
                            for (int n = 0; n < N; ++n)
                                for (int k = 0; k < K; ++k) {
                                    const std::size_t i = static_cast<std::size_t>(n) * K + k;
                                    const double target = lab[static_cast<std::size_t>(n)] == k ? 1.0 : 0.0;
                                    gi[0][i] += g[0] * (probs[i] - target) / N;
                                }
                        });
}

Tensor stack_images(std::span<const Tensor> images) {
    if (images.empty()) throw ShapeError("stack_images: no inputs");
    std::vector<Tensor> plain;
    plain.reserve(images.size());
    for (const Tensor& t : images) plain.push_back(t.detach());
    return concat_batch(plain);
}

}  // namespace tfd
