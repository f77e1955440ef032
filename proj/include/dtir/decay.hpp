// Copyright (c) 2026 dtir contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>

#include "dtir/error.hpp"

namespace dtir {

// Depth-dependent weight for anchoring/masking: exp(-a * t_mat * l / l_max).
// Layer 0 (input side) always gets 1; the deepest layer gets exp(-a * t_mat).
// a == 0 disables the decay entirely.
inline double layer_decay_factor(int layer_index, int t_mat, double a, int max_layer_index) {
    if (max_layer_index <= 0) throw ContractError("layer_decay_factor: max_layer_index must be positive");
    if (layer_index < 0 || layer_index > max_layer_index)
        throw ContractError("layer_decay_factor: layer_index out of range");
    if (a < 0.0) throw ContractError("layer_decay_factor: decay rate must be non-negative");
    const double frac = double(layer_index) / double(max_layer_index);
    return std::exp(-a * double(t_mat) * frac);
}

}  // namespace dtir
