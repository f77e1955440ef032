// Copyright (c) 2026 dtir contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <string>

#include "dtir/tensor.hpp"

namespace dtir {

// Parameter groups: backbone convolutions, learned timestep-embedding
// projections, expert adapters, and gating networks. Group membership drives
// the importance regularizer (backbone only) and the generative-gradient
// masking policy.
enum class ParamGroup { Backbone, Embedding, Adapter, Gate };

struct ParamEntry {
    Tensor tensor;
    int layer_index = 0;  // 0 = closest to the input
    ParamGroup group = ParamGroup::Backbone;
};

// Named, deterministically ordered parameter collection. Iteration follows
// lexicographic name order everywhere (optimizer, flattening, serialization),
// which keeps runs bit-reproducible.
class ParamStore {
public:
    void add(const std::string& name, Tensor t, int layer_index, ParamGroup group) {
        if (entries_.count(name)) throw ContractError("duplicate parameter name: " + name);
        t.set_requires_grad(true);
        entries_.emplace(name, ParamEntry{std::move(t), layer_index, group});
    }

    bool contains(const std::string& name) const { return entries_.count(name) != 0; }

    ParamEntry& at(const std::string& name) {
        auto it = entries_.find(name);
        if (it == entries_.end()) throw ContractError("unknown parameter: " + name);
        return it->second;
    }
    const ParamEntry& at(const std::string& name) const {
        auto it = entries_.find(name);
        if (it == entries_.end()) throw ContractError("unknown parameter: " + name);
        return it->second;
    }

    auto begin() { return entries_.begin(); }
    auto end() { return entries_.end(); }
    auto begin() const { return entries_.begin(); }
    auto end() const { return entries_.end(); }
    size_t size() const { return entries_.size(); }

    int64_t n_scalars() const {
        int64_t n = 0;
        for (const auto& [name, e] : entries_) n += e.tensor.numel();
        return n;
    }

    void zero_grads() {
        for (auto& [name, e] : entries_) e.tensor.zero_grad();
    }

    // Deep copy of values (fresh leaves, requires_grad set).
    ParamStore clone() const {
        ParamStore out;
        for (const auto& [name, e] : entries_) out.add(name, e.tensor.clone(), e.layer_index, e.group);
        return out;
    }

private:
    std::map<std::string, ParamEntry> entries_;
};

}  // namespace dtir
