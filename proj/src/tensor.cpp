// Copyright (c) 2026 dtir contributors
// SPDX-License-Identifier: Apache-2.0
#include "dtir/tensor.hpp"

#include <cmath>
#include <unordered_map>
#include <unordered_set>

#include "dtir/ops.hpp"

namespace dtir {

namespace {

int64_t shape_numel(const Shape& s) {
    int64_t n = 1;
    for (int64_t d : s) {
        if (d <= 0) throw ShapeError("tensor dims must be positive");
        n *= d;
    }
    return n;
}

bool& tape_flag() {
    thread_local bool enabled = true;
    return enabled;
}

}  // namespace

bool tape_enabled() { return tape_flag(); }

NoTape::NoTape() : prev_(tape_flag()) { tape_flag() = false; }
NoTape::~NoTape() { tape_flag() = prev_; }

Tensor Tensor::zeros(const Shape& shape, bool requires_grad) {
    auto impl = std::make_shared<TensorImpl>();
    impl->shape = shape;
    impl->data.assign(shape_numel(shape), 0.0f);
    impl->requires_grad = requires_grad;
    return Tensor(std::move(impl));
}

Tensor Tensor::full(const Shape& shape, double value) {
    Tensor t = zeros(shape);
    for (float& v : t.impl()->data) v = static_cast<float>(value);
    return t;
}

Tensor Tensor::scalar(double value) { return full({1}, value); }

Tensor Tensor::from_data(const Shape& shape, std::vector<float> data) {
    if (static_cast<int64_t>(data.size()) != shape_numel(shape))
        throw ShapeError("from_data: size does not match shape");
    auto impl = std::make_shared<TensorImpl>();
    impl->shape = shape;
    impl->data = std::move(data);
    return Tensor(std::move(impl));
}

int64_t Tensor::numel() const { return static_cast<int64_t>(impl_->data.size()); }

double Tensor::item() const {
    if (!impl_ || numel() != 1) throw ContractError("item() requires a one-element tensor");
    return impl_->data[0];
}

Tensor& Tensor::set_requires_grad(bool v) {
    if (v && impl_->node) throw ContractError("requires_grad can only be toggled on leaf tensors");
    impl_->requires_grad = v;
    return *this;
}

Tensor Tensor::grad() const {
    Tensor g = Tensor::zeros(impl_->shape);
    if (!impl_->grad.empty()) g.impl()->data = impl_->grad;
    return g;
}

float* Tensor::grad_data() {
    if (impl_->grad.empty()) impl_->grad.assign(impl_->data.size(), 0.0f);
    return impl_->grad.data();
}

void Tensor::zero_grad() { impl_->grad.clear(); }

Tensor Tensor::clone() const {
    auto impl = std::make_shared<TensorImpl>();
    impl->shape = impl_->shape;
    impl->data = impl_->data;
    return Tensor(std::move(impl));
}

void check_finite(const char* op, const float* p, int64_t n) {
    for (int64_t i = 0; i < n; ++i) {
        if (!std::isfinite(p[i]))
            throw NumericsError(std::string(op) + ": non-finite value at flat index " + std::to_string(i));
    }
}

Tensor finalize_op(const char* op, Shape shape, std::vector<float> data, std::vector<Tensor> inputs,
                   BackwardFn backward_fn, bool double_backward_ok) {
    Tensor out = Tensor::from_data(std::move(shape), std::move(data));
    check_finite(op, out.data(), out.numel());
    if (!tape_enabled()) return out;
    bool needs = false;
    for (const Tensor& in : inputs)
        if (in.defined() && in.requires_grad()) needs = true;
    if (!needs) return out;
    auto node = std::make_shared<Node>();
    node->op = op;
    node->inputs = std::move(inputs);
    node->output = out.impl();
    node->backward = std::move(backward_fn);
    node->double_backward_ok = double_backward_ok;
    out.impl()->node = std::move(node);
    out.impl()->requires_grad = true;
    return out;
}

namespace {

// Post-order over the DAG (children before parents), iterative to keep deep
// graphs off the call stack.
std::vector<Node*> topo_order(Node* root) {
    std::vector<Node*> order;
    std::unordered_set<Node*> visited;
    std::vector<std::pair<Node*, size_t>> stack;
    stack.emplace_back(root, 0);
    visited.insert(root);
    while (!stack.empty()) {
        auto& top = stack.back();
        if (top.second < top.first->inputs.size()) {
            const Tensor& in = top.first->inputs[top.second];
            ++top.second;
            Node* child = in.defined() ? in.impl()->node.get() : nullptr;
            if (child && !visited.count(child)) {
                visited.insert(child);
                stack.emplace_back(child, 0);
            }
        } else {
            order.push_back(top.first);
            stack.pop_back();
        }
    }
    return order;
}

// Gradient accumulator per tensor. Backward rules may return pass-through
// tensors (e.g. `add` hands the same gradient to both inputs), so a slot is
// cloned before the first in-place accumulation.
struct Slot {
    Tensor t;
    bool owned = false;
};

std::unordered_map<TensorImpl*, Slot> run_backward(const Tensor& root, bool create_graph) {
    if (!root.defined() || root.numel() != 1) throw ContractError("backward requires a scalar root");
    std::unordered_map<TensorImpl*, Slot> acc;
    if (root.requires_grad() || root.impl()->node) acc[root.raw()] = Slot{Tensor::scalar(1.0), true};
    if (!root.impl()->node) return acc;

    std::vector<Node*> order = topo_order(root.impl()->node.get());

    // Raw mode runs the rules untaped; create_graph leaves the tape on so the
    // produced gradients are differentiable functions of the leaves.
    std::unique_ptr<NoTape> guard;
    if (!create_graph) guard = std::make_unique<NoTape>();

    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* node = *it;
        auto out_impl = node->output.lock();
        if (!out_impl) continue;
        auto found = acc.find(out_impl.get());
        if (found == acc.end()) continue;  // no gradient reached this branch
        if (create_graph && !node->double_backward_ok)
            throw ContractError(std::string("op '") + node->op + "' does not support double backward");
        Tensor out(out_impl);
        std::vector<Tensor> gins = node->backward(out, found->second.t);
        if (gins.size() != node->inputs.size())
            throw ContractError(std::string("op '") + node->op + "': backward rule arity mismatch");
        for (size_t i = 0; i < gins.size(); ++i) {
            const Tensor& in = node->inputs[i];
            if (!gins[i].defined() || !in.defined() || !in.requires_grad()) continue;
            if (gins[i].shape() != in.shape())
                throw ShapeError(std::string("op '") + node->op + "': gradient shape mismatch");
            auto slot = acc.find(in.raw());
            if (slot == acc.end()) {
                acc.emplace(in.raw(), Slot{gins[i], false});
            } else if (create_graph) {
                slot->second.t = add(slot->second.t, gins[i]);
            } else {
                if (!slot->second.owned) {
                    slot->second.t = slot->second.t.clone();
                    slot->second.owned = true;
                }
                float* a = slot->second.t.data();
                const float* b = gins[i].data();
                int64_t n = slot->second.t.numel();
                for (int64_t k = 0; k < n; ++k) a[k] += b[k];
            }
        }
    }
    return acc;
}

}  // namespace

void backward(const Tensor& root) {
    auto acc = run_backward(root, false);
    for (auto& [impl, slot] : acc) {
        if (!impl->requires_grad) continue;
        if (impl->grad.empty()) impl->grad.assign(impl->data.size(), 0.0f);
        const float* src = slot.t.data();
        for (size_t i = 0; i < impl->grad.size(); ++i) impl->grad[i] += src[i];
    }
}

std::vector<Tensor> grad(const Tensor& root, const std::vector<Tensor>& wrt, bool create_graph) {
    auto acc = run_backward(root, create_graph);
    std::vector<Tensor> out;
    out.reserve(wrt.size());
    for (const Tensor& w : wrt) {
        auto it = acc.find(w.raw());
        if (it == acc.end()) {
            out.push_back(Tensor::zeros(w.shape()));
        } else {
            out.push_back(it->second.t);
        }
    }
    return out;
}

}  // namespace dtir
