// Copyright (c) 2026 dtir contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "dtir/error.hpp"

namespace dtir {

class Tensor;
struct Node;

using Shape = std::vector<int64_t>;

// Dense row-major float32 tensor. Gradients are accumulated into a lazily
// allocated buffer of the same size; reductions accumulate in float64.
struct TensorImpl {
    Shape shape;
    std::vector<float> data;
    std::vector<float> grad;  // empty until first accumulation
    bool requires_grad = false;
    std::shared_ptr<Node> node;  // op that produced this tensor, null for leaves
};

class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::shared_ptr<TensorImpl> impl) : impl_(std::move(impl)) {}

    static Tensor zeros(const Shape& shape, bool requires_grad = false);
    static Tensor full(const Shape& shape, double value);
    static Tensor scalar(double value);
    static Tensor from_data(const Shape& shape, std::vector<float> data);

    bool defined() const { return impl_ != nullptr; }
    const Shape& shape() const { return impl_->shape; }
    int64_t numel() const;
    int64_t dim(size_t i) const { return impl_->shape[i]; }
    size_t rank() const { return impl_->shape.size(); }

    float* data() { return impl_->data.data(); }
    const float* data() const { return impl_->data.data(); }
    std::vector<float>& vec() { return impl_->data; }
    const std::vector<float>& vec() const { return impl_->data; }

    // Scalar read; throws ContractError unless numel() == 1.
    double item() const;

    bool requires_grad() const { return impl_->requires_grad; }
    Tensor& set_requires_grad(bool v);

    bool has_grad() const { return !impl_->grad.empty(); }
    // Gradient buffer as a plain tensor (zeros if never accumulated).
    Tensor grad() const;
    float* grad_data();
    void zero_grad();

    // Deep copy of values; no tape, no grad.
    Tensor clone() const;
    // Same values, detached from the graph (copies data; leaves source intact).
    Tensor detach() const { return clone(); }

    std::shared_ptr<TensorImpl>& impl() { return impl_; }
    const std::shared_ptr<TensorImpl>& impl() const { return impl_; }
    TensorImpl* raw() const { return impl_.get(); }

private:
    std::shared_ptr<TensorImpl> impl_;
};

// Backward rule: given the node's output and the gradient flowing into it,
// produce gradients for each input (undefined Tensor = no gradient).
using BackwardFn = std::function<std::vector<Tensor>(const Tensor& out, const Tensor& grad_out)>;

struct Node {
    const char* op = "";
    std::vector<Tensor> inputs;
    std::weak_ptr<TensorImpl> output;
    BackwardFn backward;
    // True when the backward rule is itself built from taped ops, so gradients
    // of gradients are exact. Heavy kernels (conv, pooling) use raw loops and
    // reject create_graph instead of silently returning wrong second-order
    // results.
    bool double_backward_ok = false;
};

// --- tape control ------------------------------------------------------

bool tape_enabled();

// RAII guard that disables tape recording (inference / raw backward).
struct NoTape {
    NoTape();
    ~NoTape();

private:
    bool prev_;
};

// --- autodiff entry points ---------------------------------------------

// Reverse-mode sweep from a scalar root; accumulates into .grad of every
// reachable requires-grad tensor. Repeated calls keep accumulating.
void backward(const Tensor& root);

// Functional variant: returns d(root)/d(wrt[i]) without touching .grad
// buffers. With create_graph the returned tensors are themselves taped, so
// they can participate in a further backward pass.
std::vector<Tensor> grad(const Tensor& root, const std::vector<Tensor>& wrt, bool create_graph = false);

// Shared op plumbing (used by ops.cpp): finiteness check + node attachment.
Tensor finalize_op(const char* op, Shape shape, std::vector<float> data, std::vector<Tensor> inputs,
                   BackwardFn backward_fn, bool double_backward_ok);
void check_finite(const char* op, const float* p, int64_t n);

}  // namespace dtir
