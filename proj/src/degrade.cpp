// Copyright (c) 2026 dtir contributors
// SPDX-License-Identifier: Apache-2.0
#include "dtir/degrade.hpp"

#include <algorithm>
#include <cmath>

#include "dtir/error.hpp"

namespace dtir {

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    size_t pos = 0;
    while (true) {
        size_t next = s.find(sep, pos);
        if (next == std::string::npos) {
            out.push_back(s.substr(pos));
            break;
        }
        out.push_back(s.substr(pos, next - pos));
        pos = next + 1;
    }
    return out;
}

double parse_num(const std::string& s, const std::string& ctx) {
    try {
        size_t used = 0;
        double v = std::stod(s, &used);
        if (used != s.size()) throw ContractError("degradation: bad number '" + s + "' in " + ctx);
        return v;
    } catch (const ContractError&) {
        throw;
    } catch (...) {
        throw ContractError("degradation: bad number '" + s + "' in " + ctx);
    }
}

inline float clip01(double v) { return static_cast<float>(std::min(1.0, std::max(0.0, v))); }

}  // namespace

std::string Degradation::tag() const {
    auto num = [](double v) {
        std::string s = std::to_string(v);
        s.erase(s.find_last_not_of('0') + 1);
        if (!s.empty() && s.back() == '.') s.pop_back();
        return s;
    };
    switch (kind) {
        case DegradationKind::GaussianNoise: return "gaussian-noise:" + num(p1);
        case DegradationKind::Mask: return "mask:" + num(p1);
        case DegradationKind::Darken: return "darken:" + num(p1) + ":" + num(p2);
        case DegradationKind::Blur: return "blur:" + num(p1);
        case DegradationKind::Streaks: return "streaks:" + num(p1) + ":" + num(p2);
    }
    throw ContractError("degradation: unreachable kind");
}

Degradation Degradation::parse(const std::string& text) {
    std::vector<std::string> parts = split(text, ':');
    for (std::string& p : parts) {
        while (!p.empty() && (p.front() == ' ' || p.front() == '\t')) p.erase(p.begin());
        while (!p.empty() && (p.back() == ' ' || p.back() == '\t')) p.pop_back();
    }
    if (parts.empty() || parts[0].empty()) throw ContractError("degradation: empty spec");
    Degradation d;
    const std::string& name = parts[0];
    auto want = [&](size_t n) {
        if (parts.size() != n + 1)
            throw ContractError("degradation: '" + name + "' expects " + std::to_string(n) + " parameter(s)");
    };
    if (name == "gaussian-noise") {
        want(1);
        d.kind = DegradationKind::GaussianNoise;
        d.p1 = parse_num(parts[1], name);
    } else if (name == "mask") {
        want(1);
        d.kind = DegradationKind::Mask;
        d.p1 = parse_num(parts[1], name);
    } else if (name == "darken") {
        want(2);
        d.kind = DegradationKind::Darken;
        d.p1 = parse_num(parts[1], name);
        d.p2 = parse_num(parts[2], name);
    } else if (name == "blur") {
        want(1);
        d.kind = DegradationKind::Blur;
        d.p1 = parse_num(parts[1], name);
    } else if (name == "streaks") {
        want(2);
        d.kind = DegradationKind::Streaks;
        d.p1 = parse_num(parts[1], name);
        d.p2 = parse_num(parts[2], name);
    } else {
        throw ContractError("degradation: unknown kind '" + name + "'");
    }
    d.validate();
    return d;
}

void Degradation::validate() const {
    switch (kind) {
        case DegradationKind::GaussianNoise:
            if (p1 < 0.0) throw ContractError("degradation: sigma must be >= 0");
            break;
        case DegradationKind::Mask:
            if (p1 < 0.0 || p1 > 1.0) throw ContractError("degradation: mask ratio must be in [0,1]");
            break;
        case DegradationKind::Darken:
            if (!(p1 > 0.0 && p1 <= 1.0)) throw ContractError("degradation: darken gain must be in (0,1]");
            if (p2 <= 0.0) throw ContractError("degradation: darken gamma must be > 0");
            break;
        case DegradationKind::Blur: {
            const int k = int(p1);
            if (double(k) != p1 || k < 1 || k % 2 == 0)
                throw ContractError("degradation: blur kernel must be a positive odd integer");
            break;
        }
        case DegradationKind::Streaks:
            if (p1 < 0.0 || double(int(p1)) != p1) throw ContractError("degradation: streak count must be an integer >= 0");
            if (p2 < 0.0 || p2 > 1.0) throw ContractError("degradation: streak intensity must be in [0,1]");
            break;
    }
}

std::vector<Tensor> make_clean(uint64_t seed, int n, const Shape& chw) {
    if (n < 1) throw ContractError("make_clean: n must be >= 1");
    if (chw.size() != 3) throw ShapeError("make_clean: expected [C,H,W]");
    const int64_t C = chw[0], H = chw[1], W = chw[2];
    std::vector<Tensor> out;
    out.reserve(size_t(n));
    for (int i = 0; i < n; ++i) {
        Rng rng(derive_seed(seed, "clean", uint64_t(i)));
        Tensor img = Tensor::zeros(chw);
        // A linear gradient keeps large-scale structure; values stay interior
        // so later noise does not saturate at the clip boundaries.
        const double gx = rng.uniform(-0.3, 0.3), gy = rng.uniform(-0.3, 0.3);
        const double base = rng.uniform(0.35, 0.65);
        for (int64_t c = 0; c < C; ++c) {
            const double cofs = C == 1 ? 0.0 : rng.uniform(-0.05, 0.05);
            for (int64_t y = 0; y < H; ++y)
                for (int64_t x = 0; x < W; ++x) {
                    const double v = base + cofs + gx * (double(x) / double(W) - 0.5) + gy * (double(y) / double(H) - 0.5);
                    img.data()[(c * H + y) * W + x] = clip01(v);
                }
        }
        const int n_rect = 2 + int(rng.uniform_index(4));
        for (int r = 0; r < n_rect; ++r) {
            const int64_t x0 = int64_t(rng.uniform_index(uint64_t(W)));
            const int64_t y0 = int64_t(rng.uniform_index(uint64_t(H)));
            const int64_t w = 2 + int64_t(rng.uniform_index(uint64_t(std::max<int64_t>(1, W / 2))));
            const int64_t h = 2 + int64_t(rng.uniform_index(uint64_t(std::max<int64_t>(1, H / 2))));
            const double lvl = rng.uniform(0.2, 0.8);
            for (int64_t c = 0; c < C; ++c)
                for (int64_t y = y0; y < std::min(H, y0 + h); ++y)
                    for (int64_t x = x0; x < std::min(W, x0 + w); ++x)
                        img.data()[(c * H + y) * W + x] = clip01(0.5 * img.data()[(c * H + y) * W + x] + 0.5 * lvl);
        }
        const double fx = rng.uniform(1.0, 4.0), fy = rng.uniform(1.0, 4.0);
        const double amp = rng.uniform(0.05, 0.15), phase = rng.uniform(0.0, 6.283185307);
        for (int64_t c = 0; c < C; ++c)
            for (int64_t y = 0; y < H; ++y)
                for (int64_t x = 0; x < W; ++x) {
                    const int64_t idx = (c * H + y) * W + x;
                    const double s = amp * std::sin(2.0 * 3.141592653589793 * (fx * x / double(W) + fy * y / double(H)) + phase);
                    img.data()[idx] = clip01(img.data()[idx] + s);
                }
        out.push_back(img);
    }
    return out;
}

Tensor degrade(const Tensor& clean, const Degradation& kind, uint64_t seed) {
    kind.validate();
    if (!clean.defined() || clean.rank() != 3) throw ShapeError("degrade: expected [C,H,W]");
    const int64_t C = clean.dim(0), H = clean.dim(1), W = clean.dim(2);
    Rng rng(derive_seed(seed, "degrade"));
    Tensor out = clean.clone();
    switch (kind.kind) {
        case DegradationKind::GaussianNoise: {
            for (int64_t i = 0; i < out.numel(); ++i)
                out.data()[i] = clip01(double(clean.data()[i]) + kind.p1 * rng.normal());
            break;
        }
        case DegradationKind::Mask: {
            // Pixelwise Bernoulli mask shared across channels.
            for (int64_t y = 0; y < H; ++y)
                for (int64_t x = 0; x < W; ++x) {
                    const bool drop = rng.uniform() < kind.p1;
                    if (drop)
                        for (int64_t c = 0; c < C; ++c) out.data()[(c * H + y) * W + x] = 0.0f;
                }
            break;
        }
        case DegradationKind::Darken: {
            for (int64_t i = 0; i < out.numel(); ++i)
                out.data()[i] = clip01(kind.p1 * std::pow(double(clean.data()[i]), kind.p2));
            break;
        }
        case DegradationKind::Blur: {
            const int64_t k = int64_t(kind.p1), pad = k / 2;
            const double inv = 1.0 / double(k * k);
            for (int64_t c = 0; c < C; ++c)
                for (int64_t y = 0; y < H; ++y)
                    for (int64_t x = 0; x < W; ++x) {
                        double acc = 0.0;
                        for (int64_t dy = -pad; dy <= pad; ++dy)
                            for (int64_t dx = -pad; dx <= pad; ++dx) {
                                const int64_t yy = std::min(H - 1, std::max<int64_t>(0, y + dy));
                                const int64_t xx = std::min(W - 1, std::max<int64_t>(0, x + dx));
                                acc += double(clean.data()[(c * H + yy) * W + xx]);
                            }
                        out.data()[(c * H + y) * W + x] = clip01(acc * inv);
                    }
            break;
        }
        case DegradationKind::Streaks: {
            const int count = int(kind.p1);
            for (int s = 0; s < count; ++s) {
                int64_t x = int64_t(rng.uniform_index(uint64_t(W)));
                const int64_t y0 = int64_t(rng.uniform_index(uint64_t(std::max<int64_t>(1, H / 2))));
                const int64_t len = H / 3 + int64_t(rng.uniform_index(uint64_t(std::max<int64_t>(1, H / 2))));
                const int drift = int(rng.uniform_index(3)) - 1;  // lean left/none/right
                for (int64_t y = y0; y < std::min(H, y0 + len); ++y) {
                    if (x < 0 || x >= W) break;
                    for (int64_t c = 0; c < C; ++c) {
                        const int64_t idx = (c * H + y) * W + x;
                        out.data()[idx] = clip01(double(out.data()[idx]) * (1.0 - kind.p2) + kind.p2 * 1.0);
                    }
                    if ((y - y0) % 3 == 2) x += drift;
                }
            }
            break;
        }
    }
    return out;
}

Dataset make_dataset(const TaskSpec& task, const Shape& chw) {
    if (task.n_train < 1 || task.n_eval < 1) throw ContractError("make_dataset: counts must be >= 1");
    Dataset ds;
    const uint64_t train_seed = derive_seed(task.dataset_seed, "train");
    const uint64_t eval_seed = derive_seed(task.dataset_seed, "eval");
    std::vector<Tensor> tr = make_clean(train_seed, task.n_train, chw);
    std::vector<Tensor> ev = make_clean(eval_seed, task.n_eval, chw);
    for (int i = 0; i < task.n_train; ++i)
        ds.train.push_back({tr[size_t(i)], degrade(tr[size_t(i)], task.kind, derive_seed(train_seed, "pair", uint64_t(i)))});
    for (int i = 0; i < task.n_eval; ++i)
        ds.eval.push_back({ev[size_t(i)], degrade(ev[size_t(i)], task.kind, derive_seed(eval_seed, "pair", uint64_t(i)))});
    return ds;
}

}  // namespace dtir
