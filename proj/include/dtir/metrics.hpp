// Copyright (c) 2026 dtir contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "dtir/degrade.hpp"
#include "dtir/diffusion.hpp"
#include "dtir/model.hpp"
#include "dtir/tensor.hpp"

namespace dtir {

struct MetricRow {
    std::string task;
    double psnr = 0.0;
    double ssim = 0.0;
    int n = 0;
};

// 10·log10(peak²/MSE), capped at 99.0 when MSE vanishes.
double psnr(const Tensor& a, const Tensor& b, double peak = 1.0);

// Single-scale SSIM, uniform 8x8 window, stride 8, C1=(0.01·peak)²,
// C2=(0.03·peak)². Throws ContractError for images smaller than the window.
double ssim(const Tensor& a, const Tensor& b, double peak = 1.0);

// [0,1] image <-> network input space [-1,1].
Tensor to_net(const Tensor& img01);
Tensor from_net(const Tensor& net);

// restored = y minus the model's predicted degradation residual, back in
// [0,1] and clipped.
Tensor restore_image(const ParamStore& params, const ModelSpec& spec, const Tensor& y01, int t_mat,
                     bool use_moe = false);

// Mean PSNR/SSIM of restored vs clean over the task's eval split.
MetricRow evaluate(const ParamStore& params, const ModelSpec& spec, const TaskSpec& task, const Shape& chw,
                   bool use_moe = false);

}  // namespace dtir
