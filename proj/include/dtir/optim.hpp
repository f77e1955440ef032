// Copyright (c) 2026 dtir contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "dtir/params.hpp"

namespace dtir {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    // Cosine annealing from lr down to lr * floor_ratio over total_steps
    // updates; total_steps == 0 keeps the rate constant.
    int64_t total_steps = 0;
    double floor_ratio = 0.01;
};

// Adam with bias correction. Moment buffers are keyed by parameter name so an
// optimizer can be carried across stages that share a parameter set.
class Adam {
public:
    explicit Adam(AdamConfig cfg) : cfg_(cfg) {}

    // Applies one update using the accumulated gradients, then zeroes them.
    // Throws ContractError if any parameter has no gradient buffer.
    void step(ParamStore& params);

    int64_t steps_taken() const { return step_; }
    double lr_at(int64_t step) const;  // effective rate for 1-based step index
    const AdamConfig& config() const { return cfg_; }

private:
    struct Moments {
        std::vector<float> m, v;
    };
    AdamConfig cfg_;
    int64_t step_ = 0;
    std::map<std::string, Moments> state_;
};

}  // namespace dtir
