// Copyright (c) 2026 dtir contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>

#include "dtir/tensor.hpp"

namespace dtir {

// Central-difference gradient oracle for scalar-valued f. Evaluations run
// untaped; the input is perturbed in place and restored, so f must not keep
// references across calls.
inline Tensor finite_diff_grad(const std::function<double(const Tensor&)>& f, Tensor x, double h = 1e-3) {
    NoTape guard;
    Tensor g = Tensor::zeros(x.shape());
    float* px = x.data();
    float* pg = g.data();
    for (int64_t i = 0; i < x.numel(); ++i) {
        const float orig = px[i];
        px[i] = static_cast<float>(double(orig) + h);
        const double fp = f(x);
        px[i] = static_cast<float>(double(orig) - h);
        const double fm = f(x);
        px[i] = orig;
        pg[i] = static_cast<float>((fp - fm) / (2.0 * h));
    }
    return g;
}

}  // namespace dtir
