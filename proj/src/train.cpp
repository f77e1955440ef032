// Copyright (c) 2026 dtir contributors
// SPDX-License-Identifier: Apache-2.0
#include "dtir/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "dtir/decay.hpp"
#include "dtir/error.hpp"
#include "dtir/metrics.hpp"
#include "dtir/ops.hpp"

namespace dtir {

void FineTuneConfig::validate() const {
    if (!(mix_ratio >= 0.0 && mix_ratio < 1.0)) throw ContractError("finetune: mix_ratio must be in [0,1)");
    if (lambda < 0.0) throw ContractError("finetune: lambda must be >= 0");
    if (a < 0.0) throw ContractError("finetune: decay rate a must be >= 0");
    if (steps < 1) throw ContractError("finetune: steps must be >= 1");
    if (batch < 1) throw ContractError("finetune: batch must be >= 1");
    if (patch < 1) throw ContractError("finetune: patch must be >= 1");
    if (!(lr > 0.0)) throw ContractError("finetune: lr must be > 0");
    if (eval_interval < 1) throw ContractError("finetune: eval_interval must be >= 1");
    if (!(rehearsal >= 0.0 && rehearsal < 1.0)) throw ContractError("finetune: rehearsal must be in [0,1)");
}

namespace {

// Fixed flattening layout over the store's (lexicographic) iteration order.
struct FlatLayout {
    std::vector<std::string> names;
    std::vector<int64_t> offset;
    std::vector<int64_t> len;
    int64_t total = 0;

    explicit FlatLayout(const ParamStore& params) {
        for (const auto& [name, e] : params) {
            names.push_back(name);
            offset.push_back(total);
            len.push_back(e.tensor.numel());
            total += e.tensor.numel();
        }
    }

    int64_t offset_of(const std::string& name) const {
        for (size_t i = 0; i < names.size(); ++i)
            if (names[i] == name) return offset[i];
        throw ContractError("flatten: unknown parameter '" + name + "'");
    }
};

std::vector<float> flatten_grads(const ParamStore& params, const FlatLayout& lay) {
    std::vector<float> v(size_t(lay.total), 0.0f);
    size_t i = 0;
    for (const auto& [name, e] : params) {
        if (e.tensor.impl()->grad.size() == e.tensor.impl()->data.size())
            std::copy(e.tensor.impl()->grad.begin(), e.tensor.impl()->grad.end(), v.begin() + size_t(lay.offset[i]));
        ++i;
    }
    return v;
}

double cos_f64(const std::vector<float>& a, const std::vector<float>& b) {
    if (a.size() != b.size()) throw ShapeError("orthog_loss: gradient vectors differ in length");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        dot += double(a[i]) * double(b[i]);
        na += double(a[i]) * double(a[i]);
        nb += double(b[i]) * double(b[i]);
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

Tensor rec_loss_item(ParamStore& params, const ModelSpec& spec, const BatchItem& it, int t_rec, bool use_moe) {
    const Shape b{1, it.clean01.dim(0), it.clean01.dim(1), it.clean01.dim(2)};
    Tensor yn, target;
    {
        NoTape guard;  // inputs and the residual target are data
        yn = reshape(to_net(it.degraded01), b);
        target = reshape(sub(to_net(it.degraded01), to_net(it.clean01)), b);
    }
    Tensor pred = forward(params, spec, yn, {t_rec}, use_moe);
    return l1_distance(pred, target);
}

Tensor gen_loss_item(ParamStore& params, const ModelSpec& spec, const NoiseSchedule& sched, const BatchItem& it,
                     const LossWeights& weights) {
    Tensor x0n;
    {
        NoTape guard;
        x0n = to_net(it.clean01);
    }
    Tensor l = gen_item_loss(params, spec, sched, x0n, it.noise, weights);
    // Scale the summed objective to a per-pixel mean so the generative and
    // reconstruction gradient streams are commensurate in the mixed batch.
    return scalar_mul(l, 1.0 / double(x0n.numel()));
}

std::vector<BatchItem> assemble_batch(const Dataset& ds, const FineTuneConfig& cfg, int T, Rng& rng) {
    if (ds.train.empty()) throw ContractError("finetune: empty train split");
    const int n_gen = cfg.mix_ratio > 0.0 ? int(std::ceil(cfg.mix_ratio * double(cfg.batch))) : 0;
    std::vector<BatchItem> items;
    items.reserve(size_t(cfg.batch));
    for (int i = 0; i < cfg.batch; ++i) {
        const PairedSample& p = ds.train[rng.uniform_index(ds.train.size())];
        BatchItem it;
        it.clean01 = p.clean;
        if (i < n_gen) {
            it.generative = true;
            it.noise.t = 1 + int(rng.uniform_index(uint64_t(T)));
            it.noise.eps = Tensor::zeros(p.clean.shape());
            for (int64_t k = 0; k < it.noise.eps.numel(); ++k)
                it.noise.eps.data()[k] = static_cast<float>(rng.normal());
        } else {
            it.degraded01 = p.degraded;
        }
        items.push_back(std::move(it));
    }
    return items;
}

// One fine-tuning stage over pool.back()'s data, with batch-level rehearsal
// from the earlier pool entries.
TrainLog stage_run(ParamStore& params, const ModelSpec& spec, const ImportanceState& imp,
                   const std::vector<TaskSpec>& pool, const std::vector<Dataset>& datasets,
                   const FineTuneConfig& cfg, const NoiseSchedule& sched, uint64_t stage_seed, const Shape& chw) {
    cfg.validate();
    if (cfg.t_mat < 0 || cfg.t_mat > sched.T) throw ContractError("finetune: t_mat out of [0, T]");
    const FlatLayout lay(params);

    // Generative-stream scale per parameter: layer decay for backbone and
    // embedding entries, zero for adapters and gates (they are reconstruction
    // machinery and receive no generative gradient).
    std::vector<double> maskv(size_t(lay.total), 0.0);
    {
        const std::map<std::string, double> m = shallow_mask(params, spec, cfg.t_mat, cfg.a);
        for (size_t i = 0; i < lay.names.size(); ++i) {
            auto it = m.find(lay.names[i]);
            if (it == m.end()) continue;
            std::fill(maskv.begin() + size_t(lay.offset[i]), maskv.begin() + size_t(lay.offset[i] + lay.len[i]),
                      it->second);
        }
    }
    std::vector<std::pair<int64_t, int64_t>> spans;  // scope (offset, len) in layout order
    {
        const std::vector<std::string> names = scope_param_names(params, spec, cfg.orthog_scope);
        for (size_t i = 0; i < lay.names.size(); ++i)
            if (std::find(names.begin(), names.end(), lay.names[i]) != names.end())
                spans.emplace_back(lay.offset[i], lay.len[i]);
    }
    int64_t scope_total = 0;
    for (const auto& sp : spans) scope_total += sp.second;

    const LossWeights weights;
    Adam adam(AdamConfig{cfg.lr, 0.9, 0.999, 1e-8, cfg.steps, 0.01});
    Rng rng(derive_seed(stage_seed, "train"));
    TrainLog log;
    const int cur = int(pool.size()) - 1;
    const int64_t B = cfg.batch;

    for (int step = 1; step <= cfg.steps; ++step) {
        int src = cur;
        if (cur > 0 && cfg.rehearsal > 0.0 && rng.uniform() < cfg.rehearsal)
            src = int(rng.uniform_index(uint64_t(cur)));
        const int t_rec = pool[size_t(src)].t_mat;
        const std::vector<BatchItem> batch = assemble_batch(datasets[size_t(src)], cfg, sched.T, rng);

        std::vector<std::vector<float>> flats;
        flats.reserve(size_t(B));
        GradSet gs;
        double content = 0.0;
        int n_rec = 0;
        for (const BatchItem& it : batch) {
            params.zero_grads();
            Tensor loss = it.generative ? gen_loss_item(params, spec, sched, it, weights)
                                        : rec_loss_item(params, spec, it, t_rec, cfg.use_moe);
            backward(loss);
            flats.push_back(flatten_grads(params, lay));
            std::vector<float> sv;
            sv.reserve(size_t(scope_total));
            for (const auto& sp : spans)
                sv.insert(sv.end(), flats.back().begin() + size_t(sp.first),
                          flats.back().begin() + size_t(sp.first + sp.second));
            (it.generative ? gs.gen : gs.rec).push_back(std::move(sv));
            if (!it.generative) {
                content += loss.item();
                ++n_rec;
            }
        }
        const OrthogResult orth = orthog_loss(gs);

        std::vector<double> comb(size_t(lay.total), 0.0);
        for (size_t i = 0; i < flats.size(); ++i) {
            const std::vector<float>& f = flats[i];
            if (batch[i].generative) {
                for (int64_t k = 0; k < lay.total; ++k) comb[size_t(k)] += maskv[size_t(k)] * double(f[size_t(k)]) / double(B);
            } else {
                for (int64_t k = 0; k < lay.total; ++k) comb[size_t(k)] += double(f[size_t(k)]) / double(B);
            }
        }
        if (cfg.orthog && orth.mixed && orth.loss != 0.0) {
            // Alignment surrogate: the detached loss value scales a push along
            // the mixed-batch mean gradient over the scoped parameters.
            for (const auto& sp : spans)
                for (int64_t k = sp.first; k < sp.first + sp.second; ++k) {
                    double mean = 0.0;
                    for (const auto& f : flats) mean += double(f[size_t(k)]);
                    comb[size_t(k)] += orth.loss * mean / double(B);
                }
        }
        double reg_v = 0.0;
        if (cfg.lambda > 0.0 && !imp.grad_accum.empty()) {
            params.zero_grads();
            Tensor r = reg_loss(params, imp, cfg, spec);
            backward(r);
            reg_v = r.item();
            const std::vector<float> rf = flatten_grads(params, lay);
            for (int64_t k = 0; k < lay.total; ++k) comb[size_t(k)] += double(rf[size_t(k)]);
        }

        size_t pi = 0;
        for (auto& [name, e] : params) {
            float* g = e.tensor.grad_data();
            const int64_t ofs = lay.offset[pi], n = lay.len[pi];
            for (int64_t k = 0; k < n; ++k) g[k] = static_cast<float>(comb[size_t(ofs + k)]);
            ++pi;
        }
        adam.step(params);

        log.s_history.push_back(orth.s);
        log.d_history.push_back(orth.d);
        log.final_loss_content = n_rec ? content / double(n_rec) : 0.0;
        if (step % cfg.eval_interval == 0 || step == cfg.steps) {
            for (const TaskSpec& t : pool) {
                const MetricRow row = evaluate(params, spec, t, chw, cfg.use_moe);
                char buf[320];
                std::snprintf(buf, sizeof buf, "%d,%s,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f", step,
                              row.task.c_str(), log.final_loss_content, reg_v, orth.loss, orth.s, orth.d, row.psnr,
                              row.ssim);
                log.csv_rows.emplace_back(buf);
            }
        }
    }
    return log;
}

}  // namespace

PretrainLog pretrain(ParamStore& params, const ModelSpec& spec, const NoiseSchedule& sched,
                     const std::vector<Tensor>& clean01, int steps, int batch, double lr, uint64_t seed,
                     const LossWeights& weights) {
    if (steps < 1) throw ContractError("pretrain: steps must be >= 1");
    if (batch < 1) throw ContractError("pretrain: batch must be >= 1");
    if (clean01.empty()) throw ContractError("pretrain: no data");
    Adam adam(AdamConfig{lr, 0.9, 0.999, 1e-8, steps, 0.01});
    Rng rng(derive_seed(seed, "pretrain"));
    PretrainLog log;
    for (int s = 1; s <= steps; ++s) {
        params.zero_grads();
        std::vector<Tensor> x0s;
        x0s.reserve(size_t(batch));
        for (int b = 0; b < batch; ++b) x0s.push_back(to_net(clean01[rng.uniform_index(clean01.size())]));
        Tensor loss = pretrain_loss(params, spec, sched, x0s, rng, weights);
        backward(loss);
        for (auto& [name, e] : params) e.tensor.grad_data();  // zero grads for untouched params
        adam.step(params);
        log.losses.push_back(loss.item());
        if (s == 1) log.loss_first = loss.item();
    }
    const size_t tail = std::min<size_t>(10, log.losses.size());
    double acc = 0.0;
    for (size_t i = log.losses.size() - tail; i < log.losses.size(); ++i) acc += log.losses[i];
    log.loss_final_mean = acc / double(tail);
    return log;
}

ImportanceState accumulate_importance(ParamStore& params, const ModelSpec& spec, const NoiseSchedule& sched,
                                      const std::vector<Tensor>& clean01, int steps, int batch, uint64_t seed,
                                      const LossWeights& weights) {
    if (steps < 1) throw ContractError("accumulate_importance: steps must be >= 1");
    if (batch < 1) throw ContractError("accumulate_importance: batch must be >= 1");
    if (clean01.empty()) throw ContractError("accumulate_importance: no data");
    ImportanceState imp;
    for (const auto& [name, e] : params)
        if (e.group == ParamGroup::Backbone) imp.grad_accum[name] = Tensor::zeros(e.tensor.shape());
    Rng rng(derive_seed(seed, "importance"));
    for (int s = 0; s < steps; ++s) {
        params.zero_grads();
        std::vector<Tensor> x0s;
        x0s.reserve(size_t(batch));
        for (int b = 0; b < batch; ++b) x0s.push_back(to_net(clean01[rng.uniform_index(clean01.size())]));
        Tensor loss = pretrain_loss(params, spec, sched, x0s, rng, weights);
        backward(loss);
        for (auto& [name, acc] : imp.grad_accum) {
            const Tensor& t = params.at(name).tensor;
            if (!t.impl()->grad.empty())
                for (int64_t k = 0; k < acc.numel(); ++k)
                    acc.data()[k] += std::fabs(t.impl()->grad[size_t(k)]);
        }
    }
    for (auto& [name, acc] : imp.grad_accum)
        for (int64_t k = 0; k < acc.numel(); ++k) acc.data()[k] /= float(steps);
    params.zero_grads();
    for (const auto& [name, e] : params) imp.theta0[name] = e.tensor.clone();
    return imp;
}

Tensor reg_loss(ParamStore& params, const ImportanceState& imp, const FineTuneConfig& cfg, const ModelSpec& spec) {
    Tensor total = Tensor::scalar(0.0);
    for (const auto& [name, G] : imp.grad_accum) {
        ParamEntry& e = params.at(name);  // unknown name -> ContractError
        auto it0 = imp.theta0.find(name);
        if (it0 == imp.theta0.end()) throw ContractError("reg_loss: no snapshot for parameter '" + name + "'");
        const double factor =
            layer_decay_factor(e.layer_index, std::max(cfg.t_mat, 0), cfg.a, spec.max_layer_index());
        Tensor delta = sub(e.tensor, it0->second);
        Tensor first = sum(mul(G, abs(delta)));
        Tensor second = sum(mul(square(G), square(delta)));
        total = add(total, scalar_mul(add(first, second), factor));
    }
    return scalar_mul(total, cfg.lambda);
}

std::vector<std::string> scope_param_names(const ParamStore& params, const ModelSpec& spec, OrthogScope scope) {
    std::vector<std::string> names;
    for (const auto& [name, e] : params) {
        if (e.group == ParamGroup::Adapter || e.group == ParamGroup::Gate) continue;
        if (scope == OrthogScope::Shallow && e.layer_index >= spec.depth) continue;
        names.push_back(name);
    }
    return names;
}

GradSet per_sample_grads(ParamStore& params, const ModelSpec& spec, const ItemLossFn& loss_fn,
                         const std::vector<BatchItem>& batch, OrthogScope scope) {
    const std::vector<std::string> names = scope_param_names(params, spec, scope);
    int64_t total = 0;
    for (const std::string& n : names) total += params.at(n).tensor.numel();
    GradSet gs;
    for (const BatchItem& it : batch) {
        params.zero_grads();
        Tensor loss = loss_fn(it);
        backward(loss);
        std::vector<float> v;
        v.reserve(size_t(total));
        for (const std::string& n : names) {
            const Tensor& t = params.at(n).tensor;
            if (!t.impl()->grad.empty())
                v.insert(v.end(), t.impl()->grad.begin(), t.impl()->grad.end());
            else
                v.insert(v.end(), size_t(t.numel()), 0.0f);
        }
        (it.generative ? gs.gen : gs.rec).push_back(std::move(v));
    }
    params.zero_grads();
    return gs;
}

OrthogResult orthog_loss(const GradSet& gs) {
    OrthogResult r;
    if (gs.gen.empty() || gs.rec.empty()) return r;  // absent mixed batch: 0 with flag down
    r.mixed = true;
    double s = 0.0;
    int ns = 0;
    for (const auto& a : gs.gen)
        for (const auto& b : gs.rec) {
            s += cos_f64(a, b);
            ++ns;
        }
    r.s = s / double(ns);
    double d = 0.0;
    int nd = 0;
    for (const auto* group : {&gs.gen, &gs.rec})
        for (size_t i = 0; i < group->size(); ++i)
            for (size_t j = i + 1; j < group->size(); ++j) {
                d += cos_f64((*group)[i], (*group)[j]);
                ++nd;
            }
    r.d = nd ? d / double(nd) : 0.0;
    r.loss = (1.0 - r.s) + std::fabs(r.d);
    return r;
}

Tensor orthog_loss_strict(ParamStore& params, const ModelSpec& spec, const ItemLossFn& loss_fn,
                          const std::vector<BatchItem>& batch, OrthogScope scope) {
    const std::vector<std::string> names = scope_param_names(params, spec, scope);
    std::vector<Tensor> wrt;
    wrt.reserve(names.size());
    for (const std::string& n : names) wrt.push_back(params.at(n).tensor);
    std::vector<Tensor> gen_v, rec_v;
    for (const BatchItem& it : batch) {
        Tensor loss = loss_fn(it);
        std::vector<Tensor> g = grad(loss, wrt, /*create_graph=*/true);
        std::vector<Tensor> flat;
        flat.reserve(g.size());
        for (Tensor& t : g) flat.push_back(reshape(t, {t.numel()}));
        Tensor v = flat.size() == 1 ? flat[0] : concat(flat, 0);
        (it.generative ? gen_v : rec_v).push_back(v);
    }
    if (gen_v.empty() || rec_v.empty()) return Tensor::scalar(0.0);
    auto norm_val = [](const Tensor& t) {
        double n = 0.0;
        for (int64_t i = 0; i < t.numel(); ++i) n += double(t.data()[i]) * double(t.data()[i]);
        return std::sqrt(n);
    };
    auto cos_pair = [&](const Tensor& a, const Tensor& b) -> Tensor {
        // mirror the detached path: an exactly-zero vector contributes a
        // constant 0 with no gradient path
        if (norm_val(a) == 0.0 || norm_val(b) == 0.0) return Tensor::scalar(0.0);
        return mul(sum(mul(a, b)), recip(mul(l2_norm(a), l2_norm(b))));
    };
    Tensor s = Tensor::scalar(0.0);
    int ns = 0;
    for (const Tensor& a : gen_v)
        for (const Tensor& b : rec_v) {
            s = add(s, cos_pair(a, b));
            ++ns;
        }
    s = scalar_mul(s, 1.0 / double(ns));
    Tensor d = Tensor::scalar(0.0);
    int nd = 0;
    for (const auto* group : {&gen_v, &rec_v})
        for (size_t i = 0; i < group->size(); ++i)
            for (size_t j = i + 1; j < group->size(); ++j) {
                d = add(d, cos_pair((*group)[i], (*group)[j]));
                ++nd;
            }
    Tensor L = sub(Tensor::scalar(1.0), s);
    if (nd > 0) L = add(L, abs(scalar_mul(d, 1.0 / double(nd))));
    return L;
}

TrainLog finetune(ParamStore& params, const ModelSpec& spec, const ImportanceState& imp, const TaskSpec& task,
                  const FineTuneConfig& cfg, const NoiseSchedule& sched, uint64_t seed) {
    if (task.t_mat < 0) throw ContractError("finetune: task has no matched timestep");
    FineTuneConfig c = cfg;
    c.t_mat = task.t_mat;
    const Shape chw{spec.in_channels, c.patch, c.patch};
    const Dataset ds = make_dataset(task, chw);
    return stage_run(params, spec, imp, {task}, {ds}, c, sched, derive_seed(seed, "stage", 0), chw);
}

UnifiedLog unified_train(ParamStore& params, const ModelSpec& spec, const ImportanceState& imp,
                         const std::vector<TaskSpec>& tasks, const FineTuneConfig& cfg, const NoiseSchedule& sched,
                         uint64_t seed) {
    if (tasks.empty()) throw ContractError("unified_train: no tasks");
    for (size_t i = 0; i < tasks.size(); ++i) {
        if (tasks[i].t_mat < 0) throw ContractError("unified_train: task has no matched timestep");
        if (i > 0 && tasks[i].t_mat < tasks[i - 1].t_mat)
            throw ContractError("unified_train: tasks must be ordered ascending by matched timestep");
    }
    const Shape chw{spec.in_channels, cfg.patch, cfg.patch};
    std::vector<Dataset> datasets;
    datasets.reserve(tasks.size());
    for (const TaskSpec& t : tasks) datasets.push_back(make_dataset(t, chw));
    UnifiedLog out;
    std::vector<TaskSpec> pool;
    std::vector<Dataset> pool_ds;
    for (size_t i = 0; i < tasks.size(); ++i) {
        pool.push_back(tasks[i]);
        pool_ds.push_back(datasets[i]);
        FineTuneConfig c = cfg;
        c.t_mat = tasks[i].t_mat;
        out.stages.push_back(stage_run(params, spec, imp, pool, pool_ds, c, sched,
                                       derive_seed(seed, "stage", uint64_t(i)), chw));
        out.stage_params.push_back(params.clone());
    }
    return out;
}

}  // namespace dtir
