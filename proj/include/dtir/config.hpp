// Copyright (c) 2026 dtir contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "dtir/degrade.hpp"
#include "dtir/train.hpp"

namespace dtir {

// Line-oriented "key = value" run configuration with '#' comments. Unknown
// keys raise UnknownKey; out-of-range values raise RangeError.
struct RunConfig {
    std::string mode = "finetune";  // pretrain|match|finetune|unified|eval|sample
    uint64_t seed = 0;
    int T = 50;
    double beta_start = 0.02;
    double beta_end = 0.30;
    double lr = 5e-5;
    int batch = 4;
    int patch = 32;
    int steps = 2000;           // fine-tuning steps (per stage)
    int pretrain_steps = 3000;
    int importance_steps = 50;  // probe batches for importance accumulation
    double mix_ratio = 0.1;
    double lambda = 0.2;
    double a = 0.05;
    int n_experts = 10;
    double rehearsal = 0.25;
    std::vector<Degradation> tasks;  // defaults to noise/mask/blur trio
    std::string out_dir = "out";

    int eval_interval = 100;
    int n_train = 256;
    int n_eval = 16;
    int n_samples = 4;
    int match_pairs = 16;
    bool orthog = true;
    OrthogScope orthog_scope = OrthogScope::Shallow;
    int use_moe = -1;  // -1 auto (on for unified, off otherwise), 0 off, 1 on
    int in_channels = 1;
    int base_channels = 16;
    int depth = 3;
    int embed_dim = 32;
    int adapter_dim = 4;

    ModelSpec model_spec() const;
    FineTuneConfig finetune_config() const;  // t_mat left unset
    bool moe_enabled() const { return use_moe == -1 ? mode == "unified" : use_moe != 0; }
};

RunConfig parse_config_text(const std::string& text);
RunConfig load_config(const std::string& path);

}  // namespace dtir
