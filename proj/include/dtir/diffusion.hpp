// Copyright (c) 2026 dtir contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "dtir/model.hpp"
#include "dtir/rng.hpp"
#include "dtir/tensor.hpp"

namespace dtir {

// Discrete noising process tables, indexed by timestep t in [0, T]; index 0
// is the identity state (alpha_bar[0] == 1). beta/alpha/sigma are defined for
// t in [1, T]; entry 0 is a placeholder.
struct NoiseSchedule {
    int T = 0;
    std::vector<double> beta;
    std::vector<double> alpha;      // 1 - beta
    std::vector<double> alpha_bar;  // cumulative product of alpha
    std::vector<double> sigma;      // sqrt(beta)
};

// Per-timestep loss weights for the denoising objective (all ones by default).
struct LossWeights {
    std::vector<double> gamma;  // indexed 1..T; empty means uniform 1.0
    double at(int t) const { return gamma.empty() ? 1.0 : gamma.at(size_t(t)); }
};

// Linear beta ramp. Throws ScheduleError unless 0 < beta_start <= beta_end < 1
// or if the terminal state keeps more signal than terminal_max allows
// (alpha_bar[T] must be < terminal_max; pass 1.0 to lift the check for
// deliberately short schedules).
NoiseSchedule build_schedule(int T, double beta_start, double beta_end, double terminal_max = 1e-3);

// q(x_t | x_0): sqrt(alpha_bar_t) * x0 + sqrt(1 - alpha_bar_t) * eps, 0 <= t <= T.
Tensor forward_diffuse(const Tensor& x0, int t, const Tensor& eps, const NoiseSchedule& sched);

// One denoising step; z must be all-zero when t == 1 (ContractError otherwise).
Tensor reverse_step(const Tensor& xt, int t, const Tensor& eps_hat, const Tensor& z, const NoiseSchedule& sched);

// Ancestral sampling from pure noise; returns an image in the network's
// [-1,1] value range, shape chw. Deterministic per seed.
Tensor sample(const ParamStore& params, const ModelSpec& spec, const NoiseSchedule& sched, const Shape& chw,
              uint64_t seed);

// Denoising pre-training objective over a batch of clean images (already in
// network space): mean over items of gamma[t] * ||eps - model(x_t, t)||^2,
// with t ~ U{1..T} and eps ~ N(0,I) drawn per item from rng.
Tensor pretrain_loss(const ParamStore& params, const ModelSpec& spec, const NoiseSchedule& sched,
                     const std::vector<Tensor>& x0_batch, Rng& rng, const LossWeights& weights = {});

// Single generative item with its noise realization pinned, so per-sample
// gradients see exactly the term that entered the batch loss.
struct GenRealization {
    int t = 1;
    Tensor eps;
};
Tensor gen_item_loss(const ParamStore& params, const ModelSpec& spec, const NoiseSchedule& sched,
                     const Tensor& x0_net, const GenRealization& r, const LossWeights& weights = {});

}  // namespace dtir
