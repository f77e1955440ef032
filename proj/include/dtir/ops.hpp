// Copyright (c) 2026 dtir contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "dtir/tensor.hpp"

namespace dtir {

// Elementwise binary (shapes must match exactly; no broadcasting).
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);

// Scaling.
Tensor scalar_mul(const Tensor& x, double c);
// Multiply by a one-element tensor (keeps the scalar on the tape).
Tensor smul_t(const Tensor& x, const Tensor& s);
Tensor recip(const Tensor& x);  // elementwise 1/x

// Elementwise unary.
Tensor relu(const Tensor& x);
Tensor silu(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor square(const Tensor& x);
Tensor sqrt(const Tensor& x);
Tensor exp(const Tensor& x);
Tensor log(const Tensor& x);
Tensor abs(const Tensor& x);

// Softmax along the last axis.
Tensor softmax(const Tensor& x);

// Reductions to a [1] scalar (float64 accumulation).
Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);
Tensor l2_norm(const Tensor& x);                       // sqrt(sum(x^2))
Tensor l1_distance(const Tensor& a, const Tensor& b);  // mean |a - b|

// Linear algebra (2-D).
Tensor matmul(const Tensor& a, const Tensor& b);  // [M,K] x [K,N]
Tensor transpose(const Tensor& x);                // [M,N] -> [N,M]
// Row-broadcast add: x [B,N] + v [N].
Tensor add_row(const Tensor& x, const Tensor& v);

// Convolution, stride 1, zero padding to preserve H/W; kernel size 1 or 3.
// x [B,IC,H,W], w [OC,IC,K,K], optional bias [OC].
Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& bias = Tensor());
// x [B,C,H,W] + v [B,C] broadcast over the spatial dims.
Tensor add_channel(const Tensor& x, const Tensor& v);
// x [B,...] scaled per item by s [B].
Tensor scale_rows(const Tensor& x, const Tensor& s);

// Shape ops.
Tensor reshape(const Tensor& x, const Shape& shape);
Tensor concat(const std::vector<Tensor>& xs, int axis);
Tensor concat(const Tensor& a, const Tensor& b, int axis);
Tensor slice(const Tensor& x, int axis, int64_t start, int64_t len);

// Resampling on [B,C,H,W].
Tensor upsample_nearest2(const Tensor& x);  // H,W -> 2H,2W
Tensor avgpool2(const Tensor& x);           // H,W -> H/2,W/2 (H,W even)

}  // namespace dtir
