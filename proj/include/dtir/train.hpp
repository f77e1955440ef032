// Copyright (c) 2026 dtir contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "dtir/degrade.hpp"
#include "dtir/diffusion.hpp"
#include "dtir/model.hpp"
#include "dtir/optim.hpp"

namespace dtir {

// Parameter importance gathered at the end of pre-training: mean |grad| per
// backbone parameter plus a full snapshot of the pre-trained weights.
struct ImportanceState {
    std::map<std::string, Tensor> grad_accum;  // backbone keys only, elementwise >= 0
    std::map<std::string, Tensor> theta0;      // every parameter, detached copy
};

enum class OrthogScope { Shallow, All };

struct FineTuneConfig {
    double lambda = 0.2;  // drift-penalty weight
    double a = 0.05;      // layer-decay rate
    double mix_ratio = 0.1;
    int t_mat = -1;
    int steps = 2000;
    int batch = 4;
    int patch = 32;
    double lr = 5e-5;
    int eval_interval = 100;
    bool orthog = true;
    OrthogScope orthog_scope = OrthogScope::Shallow;
    bool use_moe = false;     // adapters active for reconstruction passes
    double rehearsal = 0.25;  // earlier-task batch fraction (multi-stage only)

    void validate() const;  // mix_ratio in [0,1), lambda >= 0, a >= 0, ...
};

// One fine-tuning batch element. Generative items carry a pinned noise
// realization so every gradient pass sees the same corruption.
struct BatchItem {
    bool generative = false;
    Tensor clean01;        // [C,H,W] in [0,1]
    Tensor degraded01;     // reconstruction items only
    GenRealization noise;  // generative items only
};

struct GradSet {
    std::vector<std::vector<float>> gen;  // flattened per-sample gradients
    std::vector<std::vector<float>> rec;
};

struct OrthogResult {
    double loss = 0.0;  // (1 - s) + |d|
    double s = 0.0;     // mean cross-group cosine
    double d = 0.0;     // mean within-group cosine, distinct pairs, groups pooled
    bool mixed = false;  // false when either group is empty (loss forced to 0)
};

struct TrainLog {
    std::vector<std::string> csv_rows;  // formatted metric lines (no header)
    std::vector<double> s_history;      // one entry per step
    std::vector<double> d_history;
    double final_loss_content = 0.0;
};

struct PretrainLog {
    double loss_first = 0.0;       // first batch objective, before any update
    double loss_final_mean = 0.0;  // mean over the last (up to) 10 batches
    std::vector<double> losses;    // one entry per step
};

// Noise-prediction pre-training on clean images with Adam + cosine schedule.
PretrainLog pretrain(ParamStore& params, const ModelSpec& spec, const NoiseSchedule& sched,
                     const std::vector<Tensor>& clean01, int steps, int batch, double lr, uint64_t seed,
                     const LossWeights& weights = LossWeights{});

// Runs the pre-training objective for `steps` batches without touching the
// weights and averages |grad| elementwise over the batches.
ImportanceState accumulate_importance(ParamStore& params, const ModelSpec& spec, const NoiseSchedule& sched,
                                      const std::vector<Tensor>& clean01, int steps, int batch, uint64_t seed,
                                      const LossWeights& weights = LossWeights{});

// lambda * sum_k decay(k) * sum(G|dθ| + G²dθ²) over backbone parameters,
// with dθ = θ − θ⁰ and G the accumulated importance. Taped scalar.
Tensor reg_loss(ParamStore& params, const ImportanceState& imp, const FineTuneConfig& cfg, const ModelSpec& spec);

// Taped scalar loss of a single batch item (content term for reconstruction
// items, diffusion term for generative ones).
using ItemLossFn = std::function<Tensor(const BatchItem&)>;

// Names of the parameters inside an orthogonality scope, in store order.
std::vector<std::string> scope_param_names(const ParamStore& params, const ModelSpec& spec, OrthogScope scope);

// One flattened gradient vector per item over the scoped parameters.
GradSet per_sample_grads(ParamStore& params, const ModelSpec& spec, const ItemLossFn& loss_fn,
                         const std::vector<BatchItem>& batch, OrthogScope scope);

// Detached evaluation of the gradient-alignment loss from a GradSet.
OrthogResult orthog_loss(const GradSet& gs);

// Exact differentiable form: per-sample gradients are taken with
// create_graph so the returned scalar supports true double backward. Only
// viable for small conv-free models.
Tensor orthog_loss_strict(ParamStore& params, const ModelSpec& spec, const ItemLossFn& loss_fn,
                          const std::vector<BatchItem>& batch, OrthogScope scope);

// Single-task fine-tuning: mixed generative/reconstruction batches, masked
// generative gradients, drift regularization, alignment surrogate, Adam.
TrainLog finetune(ParamStore& params, const ModelSpec& spec, const ImportanceState& imp, const TaskSpec& task,
                  const FineTuneConfig& cfg, const NoiseSchedule& sched, uint64_t seed);

struct UnifiedLog {
    std::vector<TrainLog> stages;
    std::vector<ParamStore> stage_params;  // snapshot after each stage
};

// Sequential multi-task training in ascending t_mat order with rehearsal of
// earlier tasks; regularization stays anchored to the pre-trained snapshot.
UnifiedLog unified_train(ParamStore& params, const ModelSpec& spec, const ImportanceState& imp,
                         const std::vector<TaskSpec>& tasks, const FineTuneConfig& cfg, const NoiseSchedule& sched,
                         uint64_t seed);

}  // namespace dtir
