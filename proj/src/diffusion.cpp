// Copyright (c) 2026 dtir contributors
// SPDX-License-Identifier: Apache-2.0
#include "dtir/diffusion.hpp"

#include <cmath>

#include "dtir/ops.hpp"

namespace dtir {

NoiseSchedule build_schedule(int T, double beta_start, double beta_end, double terminal_max) {
    if (T < 1) throw ScheduleError("build_schedule: T must be >= 1");
    if (!(beta_start > 0.0) || !(beta_start <= beta_end) || !(beta_end < 1.0))
        throw ScheduleError("build_schedule: need 0 < beta_start <= beta_end < 1");
    NoiseSchedule s;
    s.T = T;
    s.beta.assign(size_t(T) + 1, 0.0);
    s.alpha.assign(size_t(T) + 1, 1.0);
    s.alpha_bar.assign(size_t(T) + 1, 1.0);
    s.sigma.assign(size_t(T) + 1, 0.0);
    for (int t = 1; t <= T; ++t) {
        const double frac = T == 1 ? 0.0 : double(t - 1) / double(T - 1);
        s.beta[size_t(t)] = beta_start + (beta_end - beta_start) * frac;
        s.alpha[size_t(t)] = 1.0 - s.beta[size_t(t)];
        s.alpha_bar[size_t(t)] = s.alpha_bar[size_t(t) - 1] * s.alpha[size_t(t)];
        s.sigma[size_t(t)] = std::sqrt(s.beta[size_t(t)]);
    }
    if (!(s.alpha_bar[size_t(T)] < terminal_max))
        throw ScheduleError("build_schedule: terminal state keeps too much signal (alpha_bar[T] >= threshold)");
    return s;
}

Tensor forward_diffuse(const Tensor& x0, int t, const Tensor& eps, const NoiseSchedule& sched) {
    if (t < 0 || t > sched.T) throw ContractError("forward_diffuse: t out of [0, T]");
    if (!x0.defined() || !eps.defined() || x0.shape() != eps.shape())
        throw ShapeError("forward_diffuse: x0 and eps shapes must match");
    const double ab = sched.alpha_bar[size_t(t)];
    return add(scalar_mul(x0, std::sqrt(ab)), scalar_mul(eps, std::sqrt(1.0 - ab)));
}

Tensor reverse_step(const Tensor& xt, int t, const Tensor& eps_hat, const Tensor& z, const NoiseSchedule& sched) {
    if (t < 1 || t > sched.T) throw ContractError("reverse_step: t out of [1, T]");
    if (!xt.defined() || !eps_hat.defined() || xt.shape() != eps_hat.shape())
        throw ShapeError("reverse_step: xt and eps_hat shapes must match");
    if (!z.defined() || z.shape() != xt.shape()) throw ShapeError("reverse_step: z shape must match xt");
    if (t == 1) {
        const float* pz = z.data();
        for (int64_t i = 0; i < z.numel(); ++i)
            if (pz[i] != 0.0f) throw ContractError("reverse_step: z must be zero at t == 1");
    }
    const double a = sched.alpha[size_t(t)];
    const double ab = sched.alpha_bar[size_t(t)];
    const double coef = (1.0 - a) / std::sqrt(1.0 - ab);
    Tensor mean = scalar_mul(sub(xt, scalar_mul(eps_hat, coef)), 1.0 / std::sqrt(a));
    if (t == 1) return mean;
    return add(mean, scalar_mul(z, sched.sigma[size_t(t)]));
}

Tensor sample(const ParamStore& params, const ModelSpec& spec, const NoiseSchedule& sched, const Shape& chw,
              uint64_t seed) {
    if (chw.size() != 3) throw ShapeError("sample: expected [C,H,W]");
    NoTape guard;
    Rng rng(seed);
    Shape bshape{1, chw[0], chw[1], chw[2]};
    Tensor x = Tensor::zeros(bshape);
    for (int64_t i = 0; i < x.numel(); ++i) x.data()[i] = static_cast<float>(rng.normal());
    for (int t = sched.T; t >= 1; --t) {
        Tensor eps_hat = forward(params, spec, x, {t});
        Tensor z = Tensor::zeros(bshape);
        if (t > 1)
            for (int64_t i = 0; i < z.numel(); ++i) z.data()[i] = static_cast<float>(rng.normal());
        x = reverse_step(x, t, eps_hat, z, sched);
    }
    return reshape(x, chw);
}

Tensor gen_item_loss(const ParamStore& params, const ModelSpec& spec, const NoiseSchedule& sched,
                     const Tensor& x0_net, const GenRealization& r, const LossWeights& weights) {
    if (!x0_net.defined() || x0_net.rank() != 3) throw ShapeError("gen_item_loss: expected [C,H,W]");
    Shape bshape{1, x0_net.dim(0), x0_net.dim(1), x0_net.dim(2)};
    Tensor xt;
    {
        NoTape guard;  // the diffused input is data, not a differentiable path
        xt = reshape(forward_diffuse(x0_net, r.t, r.eps, sched), bshape);
    }
    Tensor pred = forward(params, spec, xt, {r.t});
    Tensor diff = sub(pred, reshape(r.eps, bshape));
    return scalar_mul(sum(square(diff)), weights.at(r.t));
}

Tensor pretrain_loss(const ParamStore& params, const ModelSpec& spec, const NoiseSchedule& sched,
                     const std::vector<Tensor>& x0_batch, Rng& rng, const LossWeights& weights) {
    if (x0_batch.empty()) throw ContractError("pretrain_loss: empty batch");
    const int64_t B = static_cast<int64_t>(x0_batch.size());
    const Shape& chw = x0_batch[0].shape();
    if (chw.size() != 3) throw ShapeError("pretrain_loss: items must be [C,H,W]");

    // Draw (t, eps) per item, build the noisy batch as plain data, then run
    // one batched forward; per-item weights are applied on slices.
    std::vector<GenRealization> real(static_cast<size_t>(B));
    Tensor xt = Tensor::zeros({B, chw[0], chw[1], chw[2]});
    std::vector<int> ts(static_cast<size_t>(B));
    {
        NoTape guard;
        for (int64_t i = 0; i < B; ++i) {
            if (x0_batch[size_t(i)].shape() != chw) throw ShapeError("pretrain_loss: mixed item shapes");
            GenRealization& r = real[size_t(i)];
            r.t = 1 + int(rng.uniform_index(uint64_t(sched.T)));
            r.eps = Tensor::zeros(chw);
            for (int64_t k = 0; k < r.eps.numel(); ++k) r.eps.data()[k] = static_cast<float>(rng.normal());
            Tensor noisy = forward_diffuse(x0_batch[size_t(i)], r.t, r.eps, sched);
            std::copy(noisy.data(), noisy.data() + noisy.numel(), xt.data() + i * noisy.numel());
            ts[size_t(i)] = r.t;
        }
    }
    Tensor pred = forward(params, spec, xt, ts);
    Tensor loss = Tensor::scalar(0.0);
    for (int64_t i = 0; i < B; ++i) {
        Tensor pi = slice(pred, 0, i, 1);
        Tensor diff = sub(pi, reshape(real[size_t(i)].eps, {1, chw[0], chw[1], chw[2]}));
        loss = add(loss, scalar_mul(sum(square(diff)), weights.at(real[size_t(i)].t)));
    }
    return scalar_mul(loss, 1.0 / double(B));
}

}  // namespace dtir
