// Copyright (c) 2026 dtir contributors
// SPDX-License-Identifier: Apache-2.0
#include "dtir/ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>

namespace dtir {

namespace {

void require(bool ok, const char* op, const std::string& msg) {
    if (!ok) throw ShapeError(std::string(op) + ": " + msg);
}

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
    require(a.defined() && b.defined(), op, "undefined operand");
    require(a.shape() == b.shape(), op, "operand shapes must match exactly");
}

Tensor ones_like(const Tensor& x) { return Tensor::full(x.shape(), 1.0); }

int64_t prod(const Shape& s, size_t from, size_t to) {
    int64_t p = 1;
    for (size_t i = from; i < to; ++i) p *= s[i];
    return p;
}

}  // namespace

// --- elementwise binary --------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b) {
    require_same_shape("add", a, b);
    std::vector<float> out(a.numel());
    const float* pa = a.data();
    const float* pb = b.data();
    for (int64_t i = 0; i < a.numel(); ++i) out[i] = pa[i] + pb[i];
    return finalize_op(
        "add", a.shape(), std::move(out), {a, b},
        [](const Tensor&, const Tensor& g) { return std::vector<Tensor>{g, g}; }, true);
}

Tensor sub(const Tensor& a, const Tensor& b) {
    require_same_shape("sub", a, b);
    std::vector<float> out(a.numel());
    const float* pa = a.data();
    const float* pb = b.data();
    for (int64_t i = 0; i < a.numel(); ++i) out[i] = pa[i] - pb[i];
    return finalize_op(
        "sub", a.shape(), std::move(out), {a, b},
        [](const Tensor&, const Tensor& g) { return std::vector<Tensor>{g, scalar_mul(g, -1.0)}; }, true);
}

Tensor mul(const Tensor& a, const Tensor& b) {
    require_same_shape("mul", a, b);
    std::vector<float> out(a.numel());
    const float* pa = a.data();
    const float* pb = b.data();
    for (int64_t i = 0; i < a.numel(); ++i) out[i] = pa[i] * pb[i];
    return finalize_op(
        "mul", a.shape(), std::move(out), {a, b},
        [a, b](const Tensor&, const Tensor& g) { return std::vector<Tensor>{mul(g, b), mul(g, a)}; }, true);
}

// --- scaling ---------------------------------------------------------------

Tensor scalar_mul(const Tensor& x, double c) {
    std::vector<float> out(x.numel());
    const float* p = x.data();
    const float fc = static_cast<float>(c);
    for (int64_t i = 0; i < x.numel(); ++i) out[i] = p[i] * fc;
    return finalize_op(
        "scalar_mul", x.shape(), std::move(out), {x},
        [c](const Tensor&, const Tensor& g) { return std::vector<Tensor>{scalar_mul(g, c)}; }, true);
}

Tensor smul_t(const Tensor& x, const Tensor& s) {
    require(s.defined() && s.numel() == 1, "smul_t", "scale must be a one-element tensor");
    std::vector<float> out(x.numel());
    const float* p = x.data();
    const float fc = s.data()[0];
    for (int64_t i = 0; i < x.numel(); ++i) out[i] = p[i] * fc;
    return finalize_op(
        "smul_t", x.shape(), std::move(out), {x, s},
        [x, s](const Tensor&, const Tensor& g) {
            return std::vector<Tensor>{smul_t(g, s), sum(mul(g, x))};
        },
        true);
}

Tensor recip(const Tensor& x) {
    std::vector<float> out(x.numel());
    const float* p = x.data();
    for (int64_t i = 0; i < x.numel(); ++i) out[i] = 1.0f / p[i];
    return finalize_op(
        "recip", x.shape(), std::move(out), {x},
        [](const Tensor& out, const Tensor& g) {
            return std::vector<Tensor>{scalar_mul(mul(g, square(out)), -1.0)};
        },
        true);
}

// --- elementwise unary -------------------------------------------------------

Tensor relu(const Tensor& x) {
    std::vector<float> out(x.numel());
    const float* p = x.data();
    for (int64_t i = 0; i < x.numel(); ++i) out[i] = p[i] > 0.0f ? p[i] : 0.0f;
    return finalize_op(
        "relu", x.shape(), std::move(out), {x},
        [x](const Tensor&, const Tensor& g) {
            // Mask is a constant: second derivative of relu is zero a.e.
            Tensor mask = Tensor::zeros(x.shape());
            const float* px = x.data();
            float* pm = mask.data();
            for (int64_t i = 0; i < x.numel(); ++i) pm[i] = px[i] > 0.0f ? 1.0f : 0.0f;
            return std::vector<Tensor>{mul(g, mask)};
        },
        true);
}

Tensor sigmoid(const Tensor& x) {
    std::vector<float> out(x.numel());
    const float* p = x.data();
    for (int64_t i = 0; i < x.numel(); ++i) out[i] = static_cast<float>(1.0 / (1.0 + std::exp(-double(p[i]))));
    return finalize_op(
        "sigmoid", x.shape(), std::move(out), {x},
        [](const Tensor& out, const Tensor& g) {
            return std::vector<Tensor>{mul(g, mul(out, sub(ones_like(out), out)))};
        },
        true);
}

Tensor silu(const Tensor& x) {
    std::vector<float> out(x.numel());
    const float* p = x.data();
    for (int64_t i = 0; i < x.numel(); ++i) {
        double s = 1.0 / (1.0 + std::exp(-double(p[i])));
        out[i] = static_cast<float>(p[i] * s);
    }
    return finalize_op(
        "silu", x.shape(), std::move(out), {x},
        [x](const Tensor&, const Tensor& g) {
            // d silu = s + x*s*(1-s), built from taped ops for double backward.
            Tensor s = sigmoid(x);
            Tensor d = add(s, mul(x, mul(s, sub(ones_like(s), s))));
            return std::vector<Tensor>{mul(g, d)};
        },
        true);
}

Tensor square(const Tensor& x) {
    std::vector<float> out(x.numel());
    const float* p = x.data();
    for (int64_t i = 0; i < x.numel(); ++i) out[i] = p[i] * p[i];
    return finalize_op(
        "square", x.shape(), std::move(out), {x},
        [x](const Tensor&, const Tensor& g) { return std::vector<Tensor>{scalar_mul(mul(g, x), 2.0)}; }, true);
}

Tensor sqrt(const Tensor& x) {
    std::vector<float> out(x.numel());
    const float* p = x.data();
    for (int64_t i = 0; i < x.numel(); ++i) out[i] = std::sqrt(p[i]);
    return finalize_op(
        "sqrt", x.shape(), std::move(out), {x},
        [](const Tensor& out, const Tensor& g) {
            return std::vector<Tensor>{mul(g, scalar_mul(recip(out), 0.5))};
        },
        true);
}

Tensor exp(const Tensor& x) {
    std::vector<float> out(x.numel());
    const float* p = x.data();
    for (int64_t i = 0; i < x.numel(); ++i) out[i] = std::exp(p[i]);
    return finalize_op(
        "exp", x.shape(), std::move(out), {x},
        [](const Tensor& out, const Tensor& g) { return std::vector<Tensor>{mul(g, out)}; }, true);
}

Tensor log(const Tensor& x) {
    std::vector<float> out(x.numel());
    const float* p = x.data();
    for (int64_t i = 0; i < x.numel(); ++i) out[i] = std::log(p[i]);
    return finalize_op(
        "log", x.shape(), std::move(out), {x},
        [x](const Tensor&, const Tensor& g) { return std::vector<Tensor>{mul(g, recip(x))}; }, true);
}

Tensor abs(const Tensor& x) {
    std::vector<float> out(x.numel());
    const float* p = x.data();
    for (int64_t i = 0; i < x.numel(); ++i) out[i] = std::fabs(p[i]);
    return finalize_op(
        "abs", x.shape(), std::move(out), {x},
        [x](const Tensor&, const Tensor& g) {
            // Subgradient: sign(x), 0 at 0. Constant, like the relu mask.
            Tensor sign = Tensor::zeros(x.shape());
            const float* px = x.data();
            float* ps = sign.data();
            for (int64_t i = 0; i < x.numel(); ++i) ps[i] = px[i] > 0.0f ? 1.0f : (px[i] < 0.0f ? -1.0f : 0.0f);
            return std::vector<Tensor>{mul(g, sign)};
        },
        true);
}

// --- softmax -----------------------------------------------------------------

Tensor softmax(const Tensor& x) {
    require(x.rank() >= 1, "softmax", "rank must be >= 1");
    const int64_t L = x.shape().back();
    const int64_t R = x.numel() / L;
    std::vector<float> out(x.numel());
    const float* p = x.data();
    for (int64_t r = 0; r < R; ++r) {
        const float* row = p + r * L;
        float* orow = out.data() + r * L;
        float mx = row[0];
        for (int64_t i = 1; i < L; ++i) mx = std::max(mx, row[i]);
        double denom = 0.0;
        for (int64_t i = 0; i < L; ++i) {
            double e = std::exp(double(row[i]) - double(mx));
            orow[i] = static_cast<float>(e);
            denom += e;
        }
        for (int64_t i = 0; i < L; ++i) orow[i] = static_cast<float>(orow[i] / denom);
    }
    return finalize_op(
        "softmax", x.shape(), std::move(out), {x},
        [L, R](const Tensor& out, const Tensor& g) {
            // g_in = y * (g - rowsum(g*y)), with the rowsum broadcast built
            // from taped ops so the rule stays double-backward capable.
            Tensor y2 = reshape(out, {R, L});
            Tensor g2 = reshape(g, {R, L});
            Tensor gy = mul(g2, y2);
            Tensor rs = matmul(gy, Tensor::full({L, 1}, 1.0));           // [R,1]
            Tensor bcast = scale_rows(Tensor::full({R, L}, 1.0), reshape(rs, {R}));
            Tensor gin = mul(y2, sub(g2, bcast));
            return std::vector<Tensor>{reshape(gin, out.shape())};
        },
        true);
}

// --- reductions ---------------------------------------------------------------

Tensor sum(const Tensor& x) {
    double acc = 0.0;
    const float* p = x.data();
    for (int64_t i = 0; i < x.numel(); ++i) acc += p[i];
    return finalize_op(
        "sum", {1}, {static_cast<float>(acc)}, {x},
        [x](const Tensor&, const Tensor& g) { return std::vector<Tensor>{smul_t(ones_like(x), g)}; }, true);
}

Tensor mean(const Tensor& x) {
    double acc = 0.0;
    const float* p = x.data();
    for (int64_t i = 0; i < x.numel(); ++i) acc += p[i];
    const double n = static_cast<double>(x.numel());
    return finalize_op(
        "mean", {1}, {static_cast<float>(acc / n)}, {x},
        [x, n](const Tensor&, const Tensor& g) {
            return std::vector<Tensor>{smul_t(Tensor::full(x.shape(), 1.0 / n), g)};
        },
        true);
}

Tensor l2_norm(const Tensor& x) {
    double acc = 0.0;
    const float* p = x.data();
    for (int64_t i = 0; i < x.numel(); ++i) acc += double(p[i]) * double(p[i]);
    return finalize_op(
        "l2_norm", {1}, {static_cast<float>(std::sqrt(acc))}, {x},
        [x](const Tensor& out, const Tensor& g) {
            // d||x||/dx = x/||x||
            return std::vector<Tensor>{smul_t(x, mul(g, recip(out)))};
        },
        true);
}

Tensor l1_distance(const Tensor& a, const Tensor& b) {
    require_same_shape("l1_distance", a, b);
    double acc = 0.0;
    const float* pa = a.data();
    const float* pb = b.data();
    const int64_t n = a.numel();
    for (int64_t i = 0; i < n; ++i) acc += std::fabs(double(pa[i]) - double(pb[i]));
    return finalize_op(
        "l1_distance", {1}, {static_cast<float>(acc / double(n))}, {a, b},
        [a, b, n](const Tensor&, const Tensor& g) {
            Tensor sign = Tensor::zeros(a.shape());
            const float* pa = a.data();
            const float* pb = b.data();
            float* ps = sign.data();
            const float inv = 1.0f / static_cast<float>(n);
            for (int64_t i = 0; i < n; ++i) {
                float d = pa[i] - pb[i];
                ps[i] = d > 0.0f ? inv : (d < 0.0f ? -inv : 0.0f);
            }
            Tensor ga = smul_t(sign, g);
            return std::vector<Tensor>{ga, scalar_mul(ga, -1.0)};
        },
        true);
}

// --- linear algebra ---------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
    require(a.defined() && b.defined() && a.rank() == 2 && b.rank() == 2, "matmul", "operands must be 2-D");
    const int64_t M = a.dim(0), K = a.dim(1), K2 = b.dim(0), N = b.dim(1);
    require(K == K2, "matmul", "inner dimensions must agree");
    std::vector<float> out(M * N, 0.0f);
    const float* pa = a.data();
    const float* pb = b.data();
    for (int64_t i = 0; i < M; ++i) {
        float* orow = out.data() + i * N;
        for (int64_t k = 0; k < K; ++k) {
            const float aik = pa[i * K + k];
            const float* brow = pb + k * N;
            for (int64_t j = 0; j < N; ++j) orow[j] += aik * brow[j];
        }
    }
    return finalize_op(
        "matmul", {M, N}, std::move(out), {a, b},
        [a, b](const Tensor&, const Tensor& g) {
            return std::vector<Tensor>{matmul(g, transpose(b)), matmul(transpose(a), g)};
        },
        true);
}

Tensor transpose(const Tensor& x) {
    require(x.defined() && x.rank() == 2, "transpose", "operand must be 2-D");
    const int64_t M = x.dim(0), N = x.dim(1);
    std::vector<float> out(M * N);
    const float* p = x.data();
    for (int64_t i = 0; i < M; ++i)
        for (int64_t j = 0; j < N; ++j) out[j * M + i] = p[i * N + j];
    return finalize_op(
        "transpose", {N, M}, std::move(out), {x},
        [](const Tensor&, const Tensor& g) { return std::vector<Tensor>{transpose(g)}; }, true);
}

Tensor add_row(const Tensor& x, const Tensor& v) {
    require(x.defined() && v.defined() && x.rank() == 2 && v.rank() == 1, "add_row", "expects [B,N] and [N]");
    const int64_t B = x.dim(0), N = x.dim(1);
    require(v.dim(0) == N, "add_row", "row width mismatch");
    std::vector<float> out(x.numel());
    const float* px = x.data();
    const float* pv = v.data();
    for (int64_t b = 0; b < B; ++b)
        for (int64_t j = 0; j < N; ++j) out[b * N + j] = px[b * N + j] + pv[j];
    return finalize_op(
        "add_row", x.shape(), std::move(out), {x, v},
        [B, N](const Tensor&, const Tensor& g) {
            Tensor gv = reshape(matmul(transpose(g), Tensor::full({B, 1}, 1.0)), {N});
            return std::vector<Tensor>{g, gv};
        },
        true);
}

// --- conv2d and friends --------------------------------------------------------

namespace {

// dst[y][x] += c * src[y+dy][x+dx] over the in-bounds overlap.
inline void axpy_shift(float* dst, const float* src, int64_t H, int64_t W, int64_t dy, int64_t dx, float c) {
    const int64_t y0 = std::max<int64_t>(0, -dy), y1 = std::min<int64_t>(H, H - dy);
    const int64_t x0 = std::max<int64_t>(0, -dx), x1 = std::min<int64_t>(W, W - dx);
    const int64_t len = x1 - x0;
    if (len <= 0) return;
    for (int64_t y = y0; y < y1; ++y) {
        float* d = dst + y * W + x0;
        const float* s = src + (y + dy) * W + (x0 + dx);
        for (int64_t i = 0; i < len; ++i) d[i] += c * s[i];
    }
}

// sum over the in-bounds overlap of a[y][x] * b[y+dy][x+dx].
inline double dot_shift(const float* a, const float* b, int64_t H, int64_t W, int64_t dy, int64_t dx) {
    const int64_t y0 = std::max<int64_t>(0, -dy), y1 = std::min<int64_t>(H, H - dy);
    const int64_t x0 = std::max<int64_t>(0, -dx), x1 = std::min<int64_t>(W, W - dx);
    const int64_t len = x1 - x0;
    double acc = 0.0;
    if (len <= 0) return acc;
    for (int64_t y = y0; y < y1; ++y) {
        const float* pa = a + y * W + x0;
        const float* pb = b + (y + dy) * W + (x0 + dx);
        float row = 0.0f;
        for (int64_t i = 0; i < len; ++i) row += pa[i] * pb[i];
        acc += row;
    }
    return acc;
}

}  // namespace

Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& bias) {
    require(x.defined() && x.rank() == 4, "conv2d", "input must be [B,IC,H,W]");
    require(w.defined() && w.rank() == 4, "conv2d", "weight must be [OC,IC,K,K]");
    const int64_t B = x.dim(0), IC = x.dim(1), H = x.dim(2), W = x.dim(3);
    const int64_t OC = w.dim(0), K = w.dim(2);
    require(w.dim(1) == IC, "conv2d", "input channel mismatch");
    require(w.dim(3) == K && (K == 1 || K == 3), "conv2d", "kernel must be square with size 1 or 3");
    if (bias.defined()) require(bias.rank() == 1 && bias.dim(0) == OC, "conv2d", "bias must be [OC]");
    const int64_t HW = H * W;
    const int64_t pad = K / 2;

    std::vector<float> out(B * OC * HW, 0.0f);
    const float* px = x.data();
    const float* pw = w.data();
    for (int64_t b = 0; b < B; ++b) {
        for (int64_t oc = 0; oc < OC; ++oc) {
            float* op = out.data() + (b * OC + oc) * HW;
            if (bias.defined()) {
                const float bv = bias.data()[oc];
                for (int64_t i = 0; i < HW; ++i) op[i] = bv;
            }
            for (int64_t ic = 0; ic < IC; ++ic) {
                const float* ip = px + (b * IC + ic) * HW;
                const float* wp = pw + (oc * IC + ic) * K * K;
                if (K == 1) {
                    const float c = wp[0];
                    for (int64_t i = 0; i < HW; ++i) op[i] += c * ip[i];
                } else {
                    for (int64_t ky = 0; ky < K; ++ky)
                        for (int64_t kx = 0; kx < K; ++kx)
                            axpy_shift(op, ip, H, W, ky - pad, kx - pad, wp[ky * K + kx]);
                }
            }
        }
    }

    std::vector<Tensor> inputs = bias.defined() ? std::vector<Tensor>{x, w, bias} : std::vector<Tensor>{x, w};
    const bool has_bias = bias.defined();
    return finalize_op(
        "conv2d", {B, OC, H, W}, std::move(out), std::move(inputs),
        [x, w, has_bias, B, IC, OC, H, W, K, HW, pad](const Tensor&, const Tensor& g) {
            const float* pg = g.data();
            const float* px = x.data();
            const float* pw = w.data();

            Tensor gx = Tensor::zeros(x.shape());
            float* pgx = gx.data();
            for (int64_t b = 0; b < B; ++b)
                for (int64_t ic = 0; ic < IC; ++ic) {
                    float* gp = pgx + (b * IC + ic) * HW;
                    for (int64_t oc = 0; oc < OC; ++oc) {
                        const float* gop = pg + (b * OC + oc) * HW;
                        const float* wp = pw + (oc * IC + ic) * K * K;
                        if (K == 1) {
                            const float c = wp[0];
                            for (int64_t i = 0; i < HW; ++i) gp[i] += c * gop[i];
                        } else {
                            for (int64_t ky = 0; ky < K; ++ky)
                                for (int64_t kx = 0; kx < K; ++kx)
                                    axpy_shift(gp, gop, H, W, pad - ky, pad - kx, wp[ky * K + kx]);
                        }
                    }
                }

            Tensor gw = Tensor::zeros(w.shape());
            float* pgw = gw.data();
            for (int64_t oc = 0; oc < OC; ++oc)
                for (int64_t ic = 0; ic < IC; ++ic)
                    for (int64_t ky = 0; ky < K; ++ky)
                        for (int64_t kx = 0; kx < K; ++kx) {
                            double acc = 0.0;
                            for (int64_t b = 0; b < B; ++b)
                                acc += dot_shift(pg + (b * OC + oc) * HW, px + (b * IC + ic) * HW, H, W,
                                                 ky - pad, kx - pad);
                            pgw[((oc * IC + ic) * K + ky) * K + kx] = static_cast<float>(acc);
                        }

            std::vector<Tensor> gins{gx, gw};
            if (has_bias) {
                Tensor gb = Tensor::zeros({OC});
                float* pgb = gb.data();
                for (int64_t oc = 0; oc < OC; ++oc) {
                    double acc = 0.0;
                    for (int64_t b = 0; b < B; ++b) {
                        const float* gop = pg + (b * OC + oc) * HW;
                        for (int64_t i = 0; i < HW; ++i) acc += gop[i];
                    }
                    pgb[oc] = static_cast<float>(acc);
                }
                gins.push_back(gb);
            }
            return gins;
        },
        false);
}

Tensor add_channel(const Tensor& x, const Tensor& v) {
    require(x.defined() && x.rank() == 4, "add_channel", "input must be [B,C,H,W]");
    require(v.defined() && v.rank() == 2, "add_channel", "bias must be [B,C]");
    const int64_t B = x.dim(0), C = x.dim(1), HW = x.dim(2) * x.dim(3);
    require(v.dim(0) == B && v.dim(1) == C, "add_channel", "bias dims must match [B,C]");
    std::vector<float> out(x.numel());
    const float* px = x.data();
    const float* pv = v.data();
    for (int64_t bc = 0; bc < B * C; ++bc) {
        const float c = pv[bc];
        const float* ip = px + bc * HW;
        float* op = out.data() + bc * HW;
        for (int64_t i = 0; i < HW; ++i) op[i] = ip[i] + c;
    }
    return finalize_op(
        "add_channel", x.shape(), std::move(out), {x, v},
        [B, C, HW](const Tensor&, const Tensor& g) {
            Tensor gv = reshape(matmul(reshape(g, {B * C, HW}), Tensor::full({HW, 1}, 1.0)), {B, C});
            return std::vector<Tensor>{g, gv};
        },
        true);
}

Tensor scale_rows(const Tensor& x, const Tensor& s) {
    require(x.defined() && x.rank() >= 1, "scale_rows", "input must have rank >= 1");
    require(s.defined() && s.rank() == 1 && s.dim(0) == x.dim(0), "scale_rows", "scale must be [B]");
    const int64_t B = x.dim(0);
    const int64_t inner = x.numel() / B;
    std::vector<float> out(x.numel());
    const float* px = x.data();
    const float* ps = s.data();
    for (int64_t b = 0; b < B; ++b) {
        const float c = ps[b];
        const float* ip = px + b * inner;
        float* op = out.data() + b * inner;
        for (int64_t i = 0; i < inner; ++i) op[i] = ip[i] * c;
    }
    return finalize_op(
        "scale_rows", x.shape(), std::move(out), {x, s},
        [x, s, B, inner](const Tensor&, const Tensor& g) {
            Tensor gx = scale_rows(g, s);
            Tensor gs = reshape(matmul(reshape(mul(g, x), {B, inner}), Tensor::full({inner, 1}, 1.0)), {B});
            return std::vector<Tensor>{gx, gs};
        },
        true);
}

// --- shape ops -------------------------------------------------------------------

Tensor reshape(const Tensor& x, const Shape& shape) {
    int64_t n = 1;
    for (int64_t d : shape) n *= d;
    require(n == x.numel(), "reshape", "element count must be preserved");
    std::vector<float> out(x.data(), x.data() + x.numel());
    Shape in_shape = x.shape();
    return finalize_op(
        "reshape", shape, std::move(out), {x},
        [in_shape](const Tensor&, const Tensor& g) { return std::vector<Tensor>{reshape(g, in_shape)}; },
        true);
}

Tensor concat(const std::vector<Tensor>& xs, int axis) {
    require(!xs.empty(), "concat", "needs at least one input");
    const Shape& s0 = xs[0].shape();
    require(axis >= 0 && axis < static_cast<int>(s0.size()), "concat", "axis out of range");
    int64_t axis_total = 0;
    for (const Tensor& x : xs) {
        require(x.defined() && x.rank() == s0.size(), "concat", "rank mismatch");
        for (size_t i = 0; i < s0.size(); ++i)
            if (static_cast<int>(i) != axis)
                require(x.shape()[i] == s0[i], "concat", "non-axis dims must match");
        axis_total += x.shape()[axis];
    }
    Shape out_shape = s0;
    out_shape[axis] = axis_total;

    const int64_t outer = prod(s0, 0, axis);
    const int64_t inner = prod(s0, axis + 1, s0.size());
    std::vector<float> out(outer * axis_total * inner);
    int64_t off = 0;
    for (const Tensor& x : xs) {
        const int64_t alen = x.shape()[axis];
        const float* p = x.data();
        for (int64_t o = 0; o < outer; ++o) {
            std::memcpy(out.data() + (o * axis_total + off) * inner, p + o * alen * inner,
                        sizeof(float) * alen * inner);
        }
        off += alen;
    }
    std::vector<int64_t> lens;
    for (const Tensor& x : xs) lens.push_back(x.shape()[axis]);
    return finalize_op(
        "concat", out_shape, std::move(out), xs,
        [axis, lens](const Tensor&, const Tensor& g) {
            std::vector<Tensor> gins;
            int64_t start = 0;
            for (int64_t len : lens) {
                gins.push_back(slice(g, axis, start, len));
                start += len;
            }
            return gins;
        },
        true);
}

Tensor concat(const Tensor& a, const Tensor& b, int axis) { return concat(std::vector<Tensor>{a, b}, axis); }

Tensor slice(const Tensor& x, int axis, int64_t start, int64_t len) {
    require(x.defined() && axis >= 0 && axis < static_cast<int>(x.rank()), "slice", "axis out of range");
    const Shape& s = x.shape();
    require(start >= 0 && len > 0 && start + len <= s[axis], "slice", "range out of bounds");
    Shape out_shape = s;
    out_shape[axis] = len;
    const int64_t outer = prod(s, 0, axis);
    const int64_t inner = prod(s, axis + 1, s.size());
    const int64_t alen = s[axis];
    std::vector<float> out(outer * len * inner);
    const float* p = x.data();
    for (int64_t o = 0; o < outer; ++o)
        std::memcpy(out.data() + o * len * inner, p + (o * alen + start) * inner, sizeof(float) * len * inner);
    Shape in_shape = s;
    return finalize_op(
        "slice", out_shape, std::move(out), {x},
        [axis, start, len, in_shape](const Tensor&, const Tensor& g) {
            // Scatter back as concat([zeros | g | zeros]) so the rule stays taped.
            std::vector<Tensor> parts;
            if (start > 0) {
                Shape sh = in_shape;
                sh[axis] = start;
                parts.push_back(Tensor::zeros(sh));
            }
            parts.push_back(g);
            const int64_t after = in_shape[axis] - start - len;
            if (after > 0) {
                Shape sh = in_shape;
                sh[axis] = after;
                parts.push_back(Tensor::zeros(sh));
            }
            return std::vector<Tensor>{parts.size() == 1 ? g : concat(parts, axis)};
        },
        true);
}

// --- resampling ----------------------------------------------------------------------

Tensor upsample_nearest2(const Tensor& x) {
    require(x.defined() && x.rank() == 4, "upsample_nearest2", "input must be [B,C,H,W]");
    const int64_t BC = x.dim(0) * x.dim(1), H = x.dim(2), W = x.dim(3);
    const int64_t H2 = H * 2, W2 = W * 2;
    std::vector<float> out(BC * H2 * W2);
    const float* p = x.data();
    for (int64_t bc = 0; bc < BC; ++bc) {
        const float* ip = p + bc * H * W;
        float* op = out.data() + bc * H2 * W2;
        for (int64_t y = 0; y < H; ++y)
            for (int64_t x2 = 0; x2 < W; ++x2) {
                const float v = ip[y * W + x2];
                float* o0 = op + (2 * y) * W2 + 2 * x2;
                o0[0] = v;
                o0[1] = v;
                o0[W2] = v;
                o0[W2 + 1] = v;
            }
    }
    return finalize_op(
        "upsample_nearest2", {x.dim(0), x.dim(1), H2, W2}, std::move(out), {x},
        [](const Tensor&, const Tensor& g) {
            return std::vector<Tensor>{scalar_mul(avgpool2(g), 4.0)};
        },
        true);
}

Tensor avgpool2(const Tensor& x) {
    require(x.defined() && x.rank() == 4, "avgpool2", "input must be [B,C,H,W]");
    const int64_t H = x.dim(2), W = x.dim(3);
    require(H % 2 == 0 && W % 2 == 0, "avgpool2", "H and W must be even");
    const int64_t BC = x.dim(0) * x.dim(1), H2 = H / 2, W2 = W / 2;
    std::vector<float> out(BC * H2 * W2);
    const float* p = x.data();
    for (int64_t bc = 0; bc < BC; ++bc) {
        const float* ip = p + bc * H * W;
        float* op = out.data() + bc * H2 * W2;
        for (int64_t y = 0; y < H2; ++y)
            for (int64_t x2 = 0; x2 < W2; ++x2) {
                const float* i0 = ip + (2 * y) * W + 2 * x2;
                op[y * W2 + x2] = 0.25f * (i0[0] + i0[1] + i0[W] + i0[W + 1]);
            }
    }
    return finalize_op(
        "avgpool2", {x.dim(0), x.dim(1), H2, W2}, std::move(out), {x},
        [](const Tensor&, const Tensor& g) {
            return std::vector<Tensor>{scalar_mul(upsample_nearest2(g), 0.25)};
        },
        true);
}

}  // namespace dtir
