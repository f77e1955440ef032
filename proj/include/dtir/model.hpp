// Copyright (c) 2026 dtir contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "dtir/params.hpp"
#include "dtir/tensor.hpp"

namespace dtir {

// Encoder/decoder restoration network conditioned on a timestep. Channel
// width doubles per encoder level (capped at 4x base); decoder mirrors the
// encoder with skip concatenations fused by 1x1 convolutions. Every decoder
// block carries a bank of bottleneck adapters blended by a softmax gate over
// the timestep prompt.
struct ModelSpec {
    int in_channels = 1;
    int base_channels = 16;
    int depth = 4;  // encoder blocks == decoder blocks
    int embed_dim = 32;
    int n_experts = 10;
    int adapter_dim = 4;

    int channels_at(int level) const {
        int mult = 1;
        for (int i = 0; i < level && i < 2; ++i) mult *= 2;
        return base_channels * mult;
    }
    int max_layer_index() const { return 2 * depth - 1; }
};

// Deterministic per-name initialization: He-uniform for conv/projection
// weights, zeros for biases, gates, and adapter up-projections (adapters
// start as exact no-ops, gates start uniform).
ParamStore build_model(const ModelSpec& spec, uint64_t seed);

// Sinusoidal timestep embedding, [B, dim]; rows are pairwise distinct for
// integer timesteps. Constant (never on the tape).
Tensor time_embedding(const std::vector<int>& t, int dim);

// x: [B, in_channels, H, W] with H, W divisible by 2^depth; t: one timestep
// per item (or a single value broadcast to the batch). Returns the predicted
// noise/residual field, same shape as x.
Tensor forward(const ParamStore& params, const ModelSpec& spec, const Tensor& x, const std::vector<int>& t,
               bool use_moe = false);

// Expert blend weights for one decoder block given a single timestep.
std::vector<double> gate_weights(const ParamStore& params, const ModelSpec& spec, int block, int t);

// Per-parameter scale factors for generative-objective gradients: backbone
// and embedding entries decay exponentially with layer depth; adapter and
// gate entries are excluded (the training engine treats absent as 0).
std::map<std::string, double> shallow_mask(const ParamStore& params, const ModelSpec& spec, int t_mat, double a);

}  // namespace dtir
