// Copyright (c) 2026 dtir contributors
// SPDX-License-Identifier: Apache-2.0
#include "dtir/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "dtir/error.hpp"
#include "dtir/ops.hpp"

namespace dtir {

double psnr(const Tensor& a, const Tensor& b, double peak) {
    if (!a.defined() || !b.defined() || a.shape() != b.shape()) throw ShapeError("psnr: shapes must match");
    if (!(peak > 0.0)) throw ContractError("psnr: peak must be > 0");
    double mse = 0.0;
    for (int64_t i = 0; i < a.numel(); ++i) {
        const double d = double(a.data()[i]) - double(b.data()[i]);
        mse += d * d;
    }
    mse /= double(a.numel());
    if (mse <= 0.0) return 99.0;
    return std::min(99.0, 10.0 * std::log10(peak * peak / mse));
}

double ssim(const Tensor& a, const Tensor& b, double peak) {
    if (!a.defined() || !b.defined() || a.shape() != b.shape()) throw ShapeError("ssim: shapes must match");
    if (a.rank() != 3) throw ShapeError("ssim: expected [C,H,W]");
    const int64_t C = a.dim(0), H = a.dim(1), W = a.dim(2);
    const int64_t win = 8;
    if (H < win || W < win) throw ContractError("ssim: image smaller than the 8x8 window");
    const double c1 = (0.01 * peak) * (0.01 * peak);
    const double c2 = (0.03 * peak) * (0.03 * peak);
    double total = 0.0;
    int64_t count = 0;
    for (int64_t c = 0; c < C; ++c)
        for (int64_t y0 = 0; y0 + win <= H; y0 += win)
            for (int64_t x0 = 0; x0 + win <= W; x0 += win) {
                double sa = 0.0, sb = 0.0, saa = 0.0, sbb = 0.0, sab = 0.0;
                for (int64_t y = y0; y < y0 + win; ++y)
                    for (int64_t x = x0; x < x0 + win; ++x) {
                        const double va = double(a.data()[(c * H + y) * W + x]);
                        const double vb = double(b.data()[(c * H + y) * W + x]);
                        sa += va;
                        sb += vb;
                        saa += va * va;
                        sbb += vb * vb;
                        sab += va * vb;
                    }
                const double n = double(win * win);
                const double mu_a = sa / n, mu_b = sb / n;
                const double var_a = saa / n - mu_a * mu_a;
                const double var_b = sbb / n - mu_b * mu_b;
                const double cov = sab / n - mu_a * mu_b;
                const double num = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2);
                const double den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2);
                total += num / den;
                ++count;
            }
    return total / double(count);
}

Tensor to_net(const Tensor& img01) {
    Tensor out = img01.clone();
    for (int64_t i = 0; i < out.numel(); ++i) out.data()[i] = 2.0f * out.data()[i] - 1.0f;
    return out;
}

Tensor from_net(const Tensor& net) {
    Tensor out = net.clone();
    for (int64_t i = 0; i < out.numel(); ++i)
        out.data()[i] = std::min(1.0f, std::max(0.0f, 0.5f * (out.data()[i] + 1.0f)));
    return out;
}

Tensor restore_image(const ParamStore& params, const ModelSpec& spec, const Tensor& y01, int t_mat, bool use_moe) {
    if (!y01.defined() || y01.rank() != 3) throw ShapeError("restore_image: expected [C,H,W]");
    NoTape guard;
    Tensor yn = reshape(to_net(y01), {1, y01.dim(0), y01.dim(1), y01.dim(2)});
    Tensor pred = forward(params, spec, yn, {t_mat}, use_moe);
    Tensor rn = sub(yn, pred);
    return from_net(reshape(rn, y01.shape()));
}

MetricRow evaluate(const ParamStore& params, const ModelSpec& spec, const TaskSpec& task, const Shape& chw,
                   bool use_moe) {
    Dataset ds = make_dataset(task, chw);
    if (ds.eval.empty()) throw ContractError("evaluate: empty eval split");
    MetricRow row;
    row.task = task.kind.tag();
    row.n = int(ds.eval.size());
    const int t = task.t_mat >= 0 ? task.t_mat : 1;
    for (const PairedSample& p : ds.eval) {
        Tensor restored = restore_image(params, spec, p.degraded, t, use_moe);
        row.psnr += psnr(restored, p.clean);
        row.ssim += ssim(restored, p.clean);
    }
    row.psnr /= double(row.n);
    row.ssim /= double(row.n);
    return row;
}

}  // namespace dtir
