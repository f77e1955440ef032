// Copyright (c) 2026 dtir contributors
// SPDX-License-Identifier: Apache-2.0
#include "dtir/matcher.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include "dtir/error.hpp"
#include "dtir/metrics.hpp"
#include "dtir/ops.hpp"

namespace dtir {

MatchReport match_timestep(const ParamStore& params, const ModelSpec& spec,
                           const std::vector<PairedSample>& pairs, const NoiseSchedule& sched, uint64_t seed,
                           bool model_pretrained) {
    if (pairs.empty()) throw ContractError("match_timestep: empty batch");
    NoTape guard;
    const int64_t B = int64_t(pairs.size());
    const Shape& chw = pairs[0].clean.shape();
    if (chw.size() != 3) throw ShapeError("match_timestep: pairs must be [C,H,W]");
    const int64_t n = chw[0] * chw[1] * chw[2];

    // Degradation residuals in network space, mean-centered per pair.
    std::vector<std::vector<double>> dres(static_cast<size_t>(B), std::vector<double>(static_cast<size_t>(n)));
    for (int64_t i = 0; i < B; ++i) {
        const PairedSample& p = pairs[size_t(i)];
        if (p.clean.shape() != chw || p.degraded.shape() != chw)
            throw ShapeError("match_timestep: mixed pair shapes");
        double mean = 0.0;
        for (int64_t k = 0; k < n; ++k) {
            const double r = 2.0 * (double(p.degraded.data()[k]) - double(p.clean.data()[k]));
            dres[size_t(i)][size_t(k)] = r;
            mean += r;
        }
        mean /= double(n);
        for (int64_t k = 0; k < n; ++k) dres[size_t(i)][size_t(k)] -= mean;
    }

    // All chains advance in lockstep so each timestep costs one batched
    // forward pass.
    Tensor x = Tensor::zeros({B, chw[0], chw[1], chw[2]});
    for (int64_t i = 0; i < B; ++i) {
        Rng rng(derive_seed(seed, "match-pair", uint64_t(i)));
        for (int64_t k = 0; k < n; ++k) x.data()[i * n + k] = static_cast<float>(rng.normal());
    }
    MatchReport report;
    report.n_images = int(B);
    report.random_model = !model_pretrained;
    report.per_t_error.assign(size_t(sched.T) + 1, 0.0);
    Tensor z = Tensor::zeros(x.shape());
    for (int t = sched.T; t >= 1; --t) {
        Tensor eps_hat = forward(params, spec, x, {t});
        Tensor x_prev = reverse_step(x, t, eps_hat, z, sched);
        double err = 0.0;
        for (int64_t i = 0; i < B; ++i) {
            double mean = 0.0;
            for (int64_t k = 0; k < n; ++k)
                mean += double(x.data()[i * n + k]) - double(x_prev.data()[i * n + k]);
            mean /= double(n);
            double e = 0.0;
            for (int64_t k = 0; k < n; ++k) {
                const double step_r = double(x.data()[i * n + k]) - double(x_prev.data()[i * n + k]) - mean;
                const double d = step_r - dres[size_t(i)][size_t(k)];
                e += d * d;
            }
            err += e;
        }
        report.per_t_error[size_t(t)] = err / double(B);
        x = x_prev;
    }
    int best = 1;
    for (int t = 2; t <= sched.T; ++t)
        if (report.per_t_error[size_t(t)] < report.per_t_error[size_t(best)]) best = t;
    report.t_mat = best;
    return report;
}

std::vector<TaskSpec> rank_tasks(const std::vector<TaskSpec>& tasks) {
    for (const TaskSpec& t : tasks)
        if (t.t_mat < 0) throw ContractError("rank_tasks: task '" + t.kind.tag() + "' has no matched timestep");
    std::vector<TaskSpec> out = tasks;
    std::stable_sort(out.begin(), out.end(), [](const TaskSpec& a, const TaskSpec& b) { return a.t_mat < b.t_mat; });
    return out;
}

void write_match_csv(const std::string& path, const MatchReport& report) {
    std::string out = "t,error\n";
    char buf[64];
    for (size_t t = 1; t < report.per_t_error.size(); ++t) {
        std::snprintf(buf, sizeof buf, "%zu,%.9g\n", t, report.per_t_error[t]);
        out += buf;
    }
    out += "t_mat," + std::to_string(report.t_mat) + "\n";
    const std::string tmp = path + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw Error("write_match_csv: cannot open '" + tmp + "'");
        f << out;
        if (!f) throw Error("write_match_csv: write failed for '" + tmp + "'");
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw Error("write_match_csv: rename failed for '" + path + "'");
}

int read_match_t_mat(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw Error("read_match_t_mat: cannot open '" + path + "'");
    std::string line, last;
    while (std::getline(f, line))
        if (!line.empty()) last = line;
    if (last.rfind("t_mat,", 0) != 0) throw Error("read_match_t_mat: missing footer in '" + path + "'");
    return std::stoi(last.substr(6));
}

}  // namespace dtir
