// Copyright (c) 2026 dtir contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "dtir/degrade.hpp"
#include "dtir/diffusion.hpp"
#include "dtir/model.hpp"

namespace dtir {

struct MatchReport {
    int t_mat = 0;
    std::vector<double> per_t_error;  // index 1..T used; [0] unused
    int n_images = 0;
    bool random_model = false;  // caller-supplied: matching ran without a pre-trained model
};

// Profiles a degradation: runs the deterministic reverse chain (z = 0 at
// every step) per pair and finds the timestep whose step residual best
// matches the degradation residual. Ties break to the smallest t.
MatchReport match_timestep(const ParamStore& params, const ModelSpec& spec,
                           const std::vector<PairedSample>& pairs, const NoiseSchedule& sched, uint64_t seed,
                           bool model_pretrained = true);

// Ascending by t_mat, stable; missing t_mat throws ContractError.
std::vector<TaskSpec> rank_tasks(const std::vector<TaskSpec>& tasks);

// CSV: header "t,error", one row per t, footer "t_mat,<value>".
void write_match_csv(const std::string& path, const MatchReport& report);

// Reads the footer value back from a match CSV.
int read_match_t_mat(const std::string& path);

}  // namespace dtir
