// Copyright (c) 2026 dtir contributors
// SPDX-License-Identifier: Apache-2.0
#include "dtir/model.hpp"

#include <cmath>

#include "dtir/decay.hpp"
#include "dtir/ops.hpp"
#include "dtir/rng.hpp"

namespace dtir {

namespace {

Tensor he_uniform(const Shape& shape, int64_t fan_in, uint64_t seed) {
    Tensor t = Tensor::zeros(shape);
    Rng rng(seed);
    const double limit = std::sqrt(6.0 / double(fan_in));
    float* p = t.data();
    for (int64_t i = 0; i < t.numel(); ++i) p[i] = static_cast<float>(rng.uniform(-limit, limit));
    return t;
}

void add_conv(ParamStore& ps, const std::string& prefix, int oc, int ic, int k, int layer, ParamGroup group,
              uint64_t seed, bool zero_init = false) {
    Shape wshape{oc, ic, k, k};
    Tensor w = zero_init ? Tensor::zeros(wshape) : he_uniform(wshape, int64_t(ic) * k * k, derive_seed(seed, prefix + ".w"));
    ps.add(prefix + ".w", std::move(w), layer, group);
    ps.add(prefix + ".b", Tensor::zeros({oc}), layer, group);
}

void add_linear(ParamStore& ps, const std::string& prefix, int in, int out, int layer, ParamGroup group,
                uint64_t seed, bool zero_init = false) {
    Shape wshape{in, out};
    Tensor w = zero_init ? Tensor::zeros(wshape) : he_uniform(wshape, in, derive_seed(seed, prefix + ".w"));
    ps.add(prefix + ".w", std::move(w), layer, group);
    ps.add(prefix + ".b", Tensor::zeros({out}), layer, group);
}

// conv + bias via the conv2d op's fused bias operand.
Tensor conv(const ParamStore& ps, const std::string& prefix, const Tensor& x) {
    return conv2d(x, ps.at(prefix + ".w").tensor, ps.at(prefix + ".b").tensor);
}

// Learned projection of the timestep embedding, injected per channel.
Tensor inject_time(const ParamStore& ps, const std::string& prefix, const Tensor& h, const Tensor& emb) {
    Tensor proj = add_row(matmul(emb, ps.at(prefix + ".w").tensor), ps.at(prefix + ".b").tensor);
    return add_channel(h, proj);
}

}  // namespace

ParamStore build_model(const ModelSpec& spec, uint64_t seed) {
    if (spec.depth < 1 || spec.base_channels < 1 || spec.in_channels < 1 || spec.n_experts < 1 ||
        spec.adapter_dim < 1 || spec.embed_dim < 2 || spec.embed_dim % 2 != 0)
        throw ContractError("build_model: invalid model geometry");
    ParamStore ps;
    const int D = spec.depth;
    for (int i = 0; i < D; ++i) {
        const int cin = i == 0 ? spec.in_channels : spec.channels_at(i - 1);
        const int c = spec.channels_at(i);
        const std::string b = "enc" + std::to_string(i);
        add_conv(ps, b + ".conv", c, cin, 3, i, ParamGroup::Backbone, seed);
        add_linear(ps, b + ".time", spec.embed_dim, c, i, ParamGroup::Embedding, seed);
    }
    for (int j = 0; j < D; ++j) {
        const int c = spec.channels_at(D - 1 - j);
        const int layer = D + j;
        const std::string b = "dec" + std::to_string(j);
        if (j > 0) {
            const int cin = spec.channels_at(D - j) + spec.channels_at(D - 1 - j);
            add_conv(ps, b + ".fuse", c, cin, 1, layer, ParamGroup::Backbone, seed);
        }
        add_conv(ps, b + ".conv", c, c, 3, layer, ParamGroup::Backbone, seed);
        add_linear(ps, b + ".time", spec.embed_dim, c, layer, ParamGroup::Embedding, seed);
        for (int e = 0; e < spec.n_experts; ++e) {
            const std::string a = b + ".adapter" + std::to_string(e);
            add_conv(ps, a + ".down", spec.adapter_dim, c, 1, layer, ParamGroup::Adapter, seed);
            // Zero-init up-projection: adapters contribute nothing at start.
            add_conv(ps, a + ".up", c, spec.adapter_dim, 1, layer, ParamGroup::Adapter, seed, /*zero_init=*/true);
        }
        // Zero-init gate: uniform expert blending at start.
        add_linear(ps, b + ".gate", spec.embed_dim, spec.n_experts, layer, ParamGroup::Gate, seed,
                   /*zero_init=*/true);
    }
    add_conv(ps, "head", spec.in_channels, spec.base_channels, 3, 2 * D - 1, ParamGroup::Backbone, seed);
    return ps;
}

Tensor time_embedding(const std::vector<int>& t, int dim) {
    if (dim < 2 || dim % 2 != 0) throw ContractError("time_embedding: dim must be even and >= 2");
    const int64_t B = static_cast<int64_t>(t.size());
    const int half = dim / 2;
    Tensor out = Tensor::zeros({B, dim});
    float* p = out.data();
    for (int64_t b = 0; b < B; ++b) {
        if (t[b] < 0) throw ContractError("time_embedding: negative timestep");
        for (int k = 0; k < half; ++k) {
            const double w = std::pow(10000.0, -double(k) / double(half));
            const double a = double(t[b]) * w;
            p[b * dim + 2 * k] = static_cast<float>(std::sin(a));
            p[b * dim + 2 * k + 1] = static_cast<float>(std::cos(a));
        }
    }
    return out;
}

Tensor forward(const ParamStore& params, const ModelSpec& spec, const Tensor& x, const std::vector<int>& t,
               bool use_moe) {
    if (!x.defined() || x.rank() != 4) throw ShapeError("forward: input must be [B,C,H,W]");
    const int64_t B = x.dim(0), H = x.dim(2), W = x.dim(3);
    if (x.dim(1) != spec.in_channels) throw ShapeError("forward: channel count mismatch");
    const int64_t div = int64_t(1) << spec.depth;
    if (H % div != 0 || W % div != 0) throw ShapeError("forward: H and W must be divisible by 2^depth");
    std::vector<int> tt = t;
    if (tt.size() == 1 && B > 1) tt.assign(size_t(B), t[0]);
    if (static_cast<int64_t>(tt.size()) != B) throw ShapeError("forward: one timestep per batch item required");

    const Tensor emb = time_embedding(tt, spec.embed_dim);
    const int D = spec.depth;

    std::vector<Tensor> skip(D);
    Tensor h = x;
    for (int i = 0; i < D; ++i) {
        const std::string b = "enc" + std::to_string(i);
        h = conv(params, b + ".conv", h);
        h = inject_time(params, b + ".time", h, emb);
        h = silu(h);
        skip[i] = h;
        if (i < D - 1) h = avgpool2(h);
    }

    Tensor d = skip[D - 1];
    for (int j = 0; j < D; ++j) {
        const std::string b = "dec" + std::to_string(j);
        Tensor inp = d;
        if (j > 0) {
            inp = concat(upsample_nearest2(d), skip[D - 1 - j], 1);
            inp = conv(params, b + ".fuse", inp);
        }
        Tensor hb = conv(params, b + ".conv", inp);
        hb = inject_time(params, b + ".time", hb, emb);
        hb = silu(hb);
        if (use_moe) {
            Tensor logits = add_row(matmul(emb, params.at(b + ".gate.w").tensor), params.at(b + ".gate.b").tensor);
            Tensor gates = softmax(logits);  // [B, n_experts]
            for (int e = 0; e < spec.n_experts; ++e) {
                const std::string a = b + ".adapter" + std::to_string(e);
                Tensor ad = conv(params, a + ".down", hb);
                ad = silu(ad);
                ad = conv(params, a + ".up", ad);
                Tensor we = reshape(slice(gates, 1, e, 1), {B});
                hb = add(hb, scale_rows(ad, we));
            }
        }
        d = hb;
    }
    return conv(params, "head", d);
}

std::vector<double> gate_weights(const ParamStore& params, const ModelSpec& spec, int block, int t) {
    if (block < 0 || block >= spec.depth) throw ContractError("gate_weights: decoder block out of range");
    const std::string b = "dec" + std::to_string(block);
    Tensor emb = time_embedding({t}, spec.embed_dim);
    NoTape guard;
    Tensor logits = add_row(matmul(emb, params.at(b + ".gate.w").tensor), params.at(b + ".gate.b").tensor);
    Tensor w = softmax(logits);
    std::vector<double> out(size_t(spec.n_experts));
    for (int e = 0; e < spec.n_experts; ++e) out[size_t(e)] = w.data()[e];
    return out;
}

std::map<std::string, double> shallow_mask(const ParamStore& params, const ModelSpec& spec, int t_mat, double a) {
    std::map<std::string, double> mask;
    for (const auto& [name, entry] : params) {
        if (entry.group == ParamGroup::Adapter || entry.group == ParamGroup::Gate) continue;
        mask[name] = layer_decay_factor(entry.layer_index, t_mat, a, spec.max_layer_index());
    }
    return mask;
}

}  // namespace dtir
