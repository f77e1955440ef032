// Copyright (c) 2026 dtir contributors
// SPDX-License-Identifier: Apache-2.0
#include "dtir/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "dtir/error.hpp"

namespace dtir {

namespace {

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double num(const std::string& key, const std::string& v) {
    try {
        size_t used = 0;
        double d = std::stod(v, &used);
        if (used != v.size()) throw RangeError(key, "'" + v + "' is not a number");
        return d;
    } catch (const RangeError&) {
        throw;
    } catch (...) {
        throw RangeError(key, "'" + v + "' is not a number");
    }
}

int integer(const std::string& key, const std::string& v) {
    const double d = num(key, v);
    if (d != double(int64_t(d)) || d < -2147483648.0 || d > 2147483647.0)
        throw RangeError(key, "'" + v + "' is not an integer");
    return int(d);
}

bool boolean(const std::string& key, const std::string& v) {
    if (v == "on" || v == "true" || v == "1") return true;
    if (v == "off" || v == "false" || v == "0") return false;
    throw RangeError(key, "'" + v + "' is not a boolean (on/off/true/false/1/0)");
}

}  // namespace

ModelSpec RunConfig::model_spec() const {
    ModelSpec s;
    s.in_channels = in_channels;
    s.base_channels = base_channels;
    s.depth = depth;
    s.embed_dim = embed_dim;
    s.n_experts = n_experts;
    s.adapter_dim = adapter_dim;
    return s;
}

FineTuneConfig RunConfig::finetune_config() const {
    FineTuneConfig c;
    c.lambda = lambda;
    c.a = a;
    c.mix_ratio = mix_ratio;
    c.steps = steps;
    c.batch = batch;
    c.patch = patch;
    c.lr = lr;
    c.eval_interval = eval_interval;
    c.orthog = orthog;
    c.orthog_scope = orthog_scope;
    c.use_moe = moe_enabled();
    c.rehearsal = rehearsal;
    return c;
}

RunConfig parse_config_text(const std::string& text) {
    RunConfig cfg;
    cfg.tasks = {Degradation::parse("gaussian-noise:0.1"), Degradation::parse("mask:0.25"),
                 Degradation::parse("blur:3")};
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const size_t eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("config line is not 'key = value': " + line);
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError("config line has empty key: " + line);

        if (key == "mode") {
            static const char* kModes[] = {"pretrain", "match", "finetune", "unified", "eval", "sample"};
            if (std::find_if(std::begin(kModes), std::end(kModes),
                             [&](const char* m) { return val == m; }) == std::end(kModes))
                throw RangeError(key, "'" + val + "' is not a run mode");
            cfg.mode = val;
        } else if (key == "seed") {
            if (!val.empty() && val[0] == '-') throw RangeError(key, "must be >= 0");
            try {
                size_t used = 0;
                cfg.seed = std::stoull(val, &used);
                if (used != val.size()) throw RangeError(key, "'" + val + "' is not an integer");
            } catch (const RangeError&) {
                throw;
            } catch (...) {
                throw RangeError(key, "'" + val + "' is not an integer");
            }
        } else if (key == "T") {
            cfg.T = integer(key, val);
            if (cfg.T < 1) throw RangeError(key, "must be >= 1");
        } else if (key == "beta_start") {
            cfg.beta_start = num(key, val);
            if (!(cfg.beta_start > 0.0 && cfg.beta_start < 1.0)) throw RangeError(key, "must be in (0,1)");
        } else if (key == "beta_end") {
            cfg.beta_end = num(key, val);
            if (!(cfg.beta_end > 0.0 && cfg.beta_end < 1.0)) throw RangeError(key, "must be in (0,1)");
        } else if (key == "lr") {
            cfg.lr = num(key, val);
            if (!(cfg.lr > 0.0)) throw RangeError(key, "must be > 0");
        } else if (key == "batch") {
            cfg.batch = integer(key, val);
            if (cfg.batch < 1) throw RangeError(key, "must be >= 1");
        } else if (key == "patch") {
            cfg.patch = integer(key, val);
            if (cfg.patch < 8) throw RangeError(key, "must be >= 8");
        } else if (key == "steps") {
            cfg.steps = integer(key, val);
            if (cfg.steps < 1) throw RangeError(key, "must be >= 1");
        } else if (key == "pretrain_steps") {
            cfg.pretrain_steps = integer(key, val);
            if (cfg.pretrain_steps < 1) throw RangeError(key, "must be >= 1");
        } else if (key == "importance_steps") {
            cfg.importance_steps = integer(key, val);
            if (cfg.importance_steps < 1) throw RangeError(key, "must be >= 1");
        } else if (key == "mix_ratio") {
            cfg.mix_ratio = num(key, val);
            if (!(cfg.mix_ratio >= 0.0 && cfg.mix_ratio < 1.0)) throw RangeError(key, "must be in [0,1)");
        } else if (key == "lambda") {
            cfg.lambda = num(key, val);
            if (cfg.lambda < 0.0) throw RangeError(key, "must be >= 0");
        } else if (key == "a") {
            cfg.a = num(key, val);
            if (cfg.a < 0.0) throw RangeError(key, "must be >= 0");
        } else if (key == "n_experts") {
            cfg.n_experts = integer(key, val);
            if (cfg.n_experts < 1) throw RangeError(key, "must be >= 1");
        } else if (key == "rehearsal") {
            cfg.rehearsal = num(key, val);
            if (!(cfg.rehearsal >= 0.0 && cfg.rehearsal < 1.0)) throw RangeError(key, "must be in [0,1)");
        } else if (key == "tasks") {
            cfg.tasks.clear();
            std::string item;
            std::istringstream ts(val);
            while (std::getline(ts, item, ',')) {
                item = trim(item);
                if (item.empty()) continue;
                try {
                    cfg.tasks.push_back(Degradation::parse(item));
                } catch (const ContractError& e) {
                    throw RangeError(key, e.what());
                }
            }
            if (cfg.tasks.empty()) throw RangeError(key, "no tasks given");
        } else if (key == "out_dir") {
            if (val.empty()) throw RangeError(key, "must not be empty");
            cfg.out_dir = val;
        } else if (key == "eval_interval") {
            cfg.eval_interval = integer(key, val);
            if (cfg.eval_interval < 1) throw RangeError(key, "must be >= 1");
        } else if (key == "n_train") {
            cfg.n_train = integer(key, val);
            if (cfg.n_train < 1) throw RangeError(key, "must be >= 1");
        } else if (key == "n_eval") {
            cfg.n_eval = integer(key, val);
            if (cfg.n_eval < 1) throw RangeError(key, "must be >= 1");
        } else if (key == "n_samples") {
            cfg.n_samples = integer(key, val);
            if (cfg.n_samples < 1) throw RangeError(key, "must be >= 1");
        } else if (key == "match_pairs") {
            cfg.match_pairs = integer(key, val);
            if (cfg.match_pairs < 16) throw RangeError(key, "matching averages over at least 16 pairs");
        } else if (key == "orthog") {
            cfg.orthog = boolean(key, val);
        } else if (key == "orthog_scope") {
            if (val == "shallow")
                cfg.orthog_scope = OrthogScope::Shallow;
            else if (val == "all")
                cfg.orthog_scope = OrthogScope::All;
            else
                throw RangeError(key, "'" + val + "' is not a scope (shallow/all)");
        } else if (key == "use_moe") {
            if (val == "auto")
                cfg.use_moe = -1;
            else
                cfg.use_moe = boolean(key, val) ? 1 : 0;
        } else if (key == "in_channels") {
            cfg.in_channels = integer(key, val);
            if (cfg.in_channels != 1 && cfg.in_channels != 3) throw RangeError(key, "must be 1 or 3");
        } else if (key == "base_channels") {
            cfg.base_channels = integer(key, val);
            if (cfg.base_channels < 1) throw RangeError(key, "must be >= 1");
        } else if (key == "depth") {
            cfg.depth = integer(key, val);
            if (cfg.depth < 2) throw RangeError(key, "must be >= 2");
        } else if (key == "embed_dim") {
            cfg.embed_dim = integer(key, val);
            if (cfg.embed_dim < 2 || cfg.embed_dim % 2 != 0) throw RangeError(key, "must be an even number >= 2");
        } else if (key == "adapter_dim") {
            cfg.adapter_dim = integer(key, val);
            if (cfg.adapter_dim < 1) throw RangeError(key, "must be >= 1");
        } else {
            throw UnknownKey(key);
        }
    }
    if (cfg.beta_start > cfg.beta_end) throw RangeError("beta_start", "must be <= beta_end");
    if (cfg.patch % (1 << cfg.depth) != 0)
        throw RangeError("patch", "must be divisible by 2^depth for the encoder/decoder ladder");
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file '" + path + "'");
    std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return parse_config_text(text);
}

}  // namespace dtir
