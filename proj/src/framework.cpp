// Copyright (c) 2026 dtir contributors
// SPDX-License-Identifier: Apache-2.0
#include "dtir/framework.hpp"

#include <cstdio>
#include <filesystem>

#include "dtir/checkpoint.hpp"
#include "dtir/error.hpp"
#include "dtir/image_io.hpp"
#include "dtir/matcher.hpp"
#include "dtir/metrics.hpp"

namespace dtir {

namespace {

namespace fs = std::filesystem;

constexpr const char* kMetricsHeader = "step,task,loss_content,loss_reg,loss_orthog,s,d,psnr,ssim\n";

std::string sanitize(const std::string& tag) {
    std::string s = tag;
    for (char& c : s)
        if (c == ':') c = '-';
    return s;
}

// Pipeline context: everything the stages share.
struct Run {
    const RunConfig& cfg;
    NoiseSchedule sched;
    ModelSpec spec;
    Shape chw;
    std::vector<TaskSpec> tasks;
    std::vector<Tensor> clean;  // pre-training images
    std::vector<std::string> artifacts;

    explicit Run(const RunConfig& c)
        : cfg(c),
          sched(build_schedule(c.T, c.beta_start, c.beta_end)),
          spec(c.model_spec()),
          chw{c.in_channels, c.patch, c.patch} {
        for (const Degradation& d : c.tasks) {
            TaskSpec t;
            t.kind = d;
            t.dataset_seed = derive_seed(c.seed, "task:" + d.tag());
            t.n_train = c.n_train;
            t.n_eval = c.n_eval;
            tasks.push_back(t);
        }
        clean = make_clean(derive_seed(c.seed, "pretrain-data"), c.n_train, chw);
    }

    std::string path(const std::string& name) const { return (fs::path(cfg.out_dir) / name).string(); }

    void record(const std::string& name) { artifacts.push_back(name); }

    // Produces (or reuses) the generative pre-trained model.
    ParamStore pretrained() {
        const std::string p = path("pretrained.ckpt");
        record("pretrained.ckpt");
        if (fs::exists(p)) {
            LoadedModel lm = load_model_checkpoint(p);
            if (lm.spec.in_channels != spec.in_channels || lm.spec.base_channels != spec.base_channels ||
                lm.spec.depth != spec.depth || lm.spec.embed_dim != spec.embed_dim ||
                lm.spec.n_experts != spec.n_experts || lm.spec.adapter_dim != spec.adapter_dim)
                throw Error("pretrained.ckpt geometry does not match the configured model");
            return std::move(lm.params);
        }
        ParamStore params = build_model(spec, derive_seed(cfg.seed, "model"));
        pretrain(params, spec, sched, clean, cfg.pretrain_steps, cfg.batch, cfg.lr, cfg.seed);
        save_model_checkpoint(params, spec, false, p);
        return params;
    }

    ImportanceState importance(ParamStore& params) {
        const std::string p = path("importance.ckpt");
        record("importance.ckpt");
        if (fs::exists(p)) return load_importance(p);
        ImportanceState imp =
            accumulate_importance(params, spec, sched, clean, cfg.importance_steps, cfg.batch, cfg.seed);
        save_importance(imp, p);
        return imp;
    }

    // Matches one task, writes its CSV, and fills t_mat in place.
    void match_task(const ParamStore& params, TaskSpec& task) {
        const Dataset ds = make_dataset(task, chw);
        std::vector<PairedSample> pairs(ds.train.begin(),
                                        ds.train.begin() + std::min<size_t>(size_t(cfg.match_pairs), ds.train.size()));
        const MatchReport report =
            match_timestep(params, spec, pairs, sched, derive_seed(cfg.seed, "match:" + task.kind.tag()));
        task.t_mat = report.t_mat;
        const std::string name = "match_" + sanitize(task.kind.tag()) + ".csv";
        write_match_csv(path(name), report);
        record(name);
    }

    void write_metrics(const std::vector<std::string>& rows) {
        std::string text = kMetricsHeader;
        for (const std::string& r : rows) text += r + "\n";
        atomic_write_text(path("metrics.csv"), text);
        record("metrics.csv");
    }

    void write_manifest() const {
        std::string text;
        for (const std::string& a : artifacts) text += a + "\n";
        atomic_write_text(path("manifest.txt"), text);
    }
};

void mode_pretrain(Run& run) { run.pretrained(); }

void mode_match(Run& run) {
    ParamStore params = run.pretrained();
    for (TaskSpec& t : run.tasks) run.match_task(params, t);
}

void mode_finetune(Run& run) {
    ParamStore params = run.pretrained();
    ImportanceState imp = run.importance(params);
    TaskSpec task = run.tasks.front();  // single-task mode trains the first configured task
    run.match_task(params, task);
    const TrainLog log = finetune(params, run.spec, imp, task, run.cfg.finetune_config(), run.sched, run.cfg.seed);
    save_model_checkpoint(params, run.spec, run.cfg.moe_enabled(), run.path("finetuned.ckpt"));
    run.record("finetuned.ckpt");
    run.write_metrics(log.csv_rows);
}

void mode_unified(Run& run) {
    ParamStore params = run.pretrained();
    ImportanceState imp = run.importance(params);
    for (TaskSpec& t : run.tasks) run.match_task(params, t);
    const std::vector<TaskSpec> ordered = rank_tasks(run.tasks);
    const UnifiedLog log =
        unified_train(params, run.spec, imp, ordered, run.cfg.finetune_config(), run.sched, run.cfg.seed);
    std::vector<std::string> rows;
    for (size_t i = 0; i < log.stages.size(); ++i) {
        const std::string name = "stage" + std::to_string(i + 1) + ".ckpt";
        save_model_checkpoint(log.stage_params[i], run.spec, run.cfg.moe_enabled(), run.path(name));
        run.record(name);
        rows.insert(rows.end(), log.stages[i].csv_rows.begin(), log.stages[i].csv_rows.end());
    }
    run.write_metrics(rows);
}

void mode_eval(Run& run) {
    // Prefer the furthest-trained artifact: last unified stage, then the
    // single-task model, then the raw pre-trained one.
    std::string model_path;
    for (int i = 64; i >= 1 && model_path.empty(); --i) {
        const std::string p = run.path("stage" + std::to_string(i) + ".ckpt");
        if (fs::exists(p)) model_path = p;
    }
    if (model_path.empty() && fs::exists(run.path("finetuned.ckpt"))) model_path = run.path("finetuned.ckpt");
    if (model_path.empty() && fs::exists(run.path("pretrained.ckpt"))) model_path = run.path("pretrained.ckpt");
    if (model_path.empty()) throw Error("eval: no model checkpoint found under '" + run.cfg.out_dir + "'");
    LoadedModel lm = load_model_checkpoint(model_path);

    std::string text = "task,psnr,ssim,psnr_baseline,ssim_baseline,n\n";
    for (TaskSpec& task : run.tasks) {
        const std::string match_name = "match_" + sanitize(task.kind.tag()) + ".csv";
        if (fs::exists(run.path(match_name))) {
            task.t_mat = read_match_t_mat(run.path(match_name));
        } else {
            run.match_task(lm.params, task);
        }
        const MetricRow row = evaluate(lm.params, lm.spec, task, run.chw, lm.use_moe);
        const Dataset ds = make_dataset(task, run.chw);
        double bp = 0.0, bs = 0.0;
        for (const PairedSample& p : ds.eval) {
            bp += psnr(p.degraded, p.clean);
            bs += ssim(p.degraded, p.clean);
        }
        bp /= double(ds.eval.size());
        bs /= double(ds.eval.size());
        char buf[256];
        std::snprintf(buf, sizeof buf, "%s,%.6f,%.6f,%.6f,%.6f,%d\n", row.task.c_str(), row.psnr, row.ssim, bp, bs,
                      row.n);
        text += buf;
    }
    atomic_write_text(run.path("eval.csv"), text);
    run.record("eval.csv");
}

void mode_sample(Run& run) {
    ParamStore params = run.pretrained();
    for (int i = 0; i < run.cfg.n_samples; ++i) {
        const Tensor net = sample(params, run.spec, run.sched, run.chw, derive_seed(run.cfg.seed, "sample", uint64_t(i)));
        const std::string name =
            "sample_" + std::to_string(i) + (run.cfg.in_channels == 1 ? ".pgm" : ".ppm");
        write_image(run.path(name), from_net(net));
        run.record(name);
    }
}

}  // namespace

std::vector<std::string> run_framework(const RunConfig& cfg) {
    if (cfg.tasks.empty()) throw ConfigError("no tasks configured");
    fs::create_directories(cfg.out_dir);
    Run run(cfg);
    if (cfg.mode == "pretrain")
        mode_pretrain(run);
    else if (cfg.mode == "match")
        mode_match(run);
    else if (cfg.mode == "finetune")
        mode_finetune(run);
    else if (cfg.mode == "unified")
        mode_unified(run);
    else if (cfg.mode == "eval")
        mode_eval(run);
    else if (cfg.mode == "sample")
        mode_sample(run);
    else
        throw ConfigError("unknown mode '" + cfg.mode + "'");
    run.write_manifest();
    return run.artifacts;
}

}  // namespace dtir
