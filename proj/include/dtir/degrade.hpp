// Copyright (c) 2026 dtir contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "dtir/rng.hpp"
#include "dtir/tensor.hpp"

namespace dtir {

enum class DegradationKind { GaussianNoise, Mask, Darken, Blur, Streaks };

// One degradation operator plus its parameters. Parameter slots not used by
// a kind are ignored.
struct Degradation {
    DegradationKind kind = DegradationKind::GaussianNoise;
    double p1 = 0.0;  // sigma | ratio | gain | kernel | count
    double p2 = 0.0;  // -     | -     | gamma | -      | intensity

    std::string tag() const;
    // Parses "gaussian-noise:0.1", "mask:0.3", "darken:0.5:1.2", "blur:3",
    // "streaks:12:0.8". Throws ContractError on unknown kind or bad params.
    static Degradation parse(const std::string& text);
    void validate() const;
};

struct TaskSpec {
    Degradation kind;
    int t_mat = -1;  // unset until matching runs
    uint64_t dataset_seed = 0;
    int n_train = 0;
    int n_eval = 0;
};

struct PairedSample {
    Tensor clean;     // [C,H,W] in [0,1]
    Tensor degraded;  // same shape, clipped to [0,1]
};

struct Dataset {
    std::vector<PairedSample> train;
    std::vector<PairedSample> eval;
};

// Procedural structured images: gradient base + random rectangles + sinusoid,
// clamped to [0,1]. Deterministic per seed.
std::vector<Tensor> make_clean(uint64_t seed, int n, const Shape& chw);

Tensor degrade(const Tensor& clean, const Degradation& kind, uint64_t seed);

// Train/eval pairs drawn from disjoint seed streams of task.dataset_seed.
Dataset make_dataset(const TaskSpec& task, const Shape& chw);

}  // namespace dtir
