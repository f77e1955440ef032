// Copyright (c) 2026 dtir contributors
// SPDX-License-Identifier: Apache-2.0
#include "dtir/optim.hpp"

#include <cmath>

namespace dtir {

double Adam::lr_at(int64_t step) const {
    if (cfg_.total_steps <= 0) return cfg_.lr;
    const double floor = cfg_.lr * cfg_.floor_ratio;
    const double frac = double(std::min(step, cfg_.total_steps)) / double(cfg_.total_steps);
    return floor + 0.5 * (cfg_.lr - floor) * (1.0 + std::cos(3.14159265358979323846 * frac));
}

void Adam::step(ParamStore& params) {
    ++step_;
    const double lr = lr_at(step_);
    const double bc1 = 1.0 - std::pow(cfg_.beta1, double(step_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, double(step_));
    for (auto& [name, entry] : params) {
        Tensor& p = entry.tensor;
        if (!p.has_grad()) throw ContractError("adam: parameter '" + name + "' has no gradient");
        auto& mom = state_[name];
        if (mom.m.empty()) {
            mom.m.assign(p.numel(), 0.0f);
            mom.v.assign(p.numel(), 0.0f);
        }
        float* w = p.data();
        const float* g = p.grad_data();
        for (int64_t i = 0; i < p.numel(); ++i) {
            const double gi = g[i];
            const double m = cfg_.beta1 * mom.m[i] + (1.0 - cfg_.beta1) * gi;
            const double v = cfg_.beta2 * mom.v[i] + (1.0 - cfg_.beta2) * gi * gi;
            mom.m[i] = static_cast<float>(m);
            mom.v[i] = static_cast<float>(v);
            const double mhat = m / bc1;
            const double vhat = v / bc2;
            w[i] = static_cast<float>(w[i] - lr * mhat / (std::sqrt(vhat) + cfg_.eps));
        }
    }
    for (auto& [name, entry] : params) entry.tensor.zero_grad();
}

}  // namespace dtir
