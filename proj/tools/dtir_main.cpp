// Copyright (c) 2026 dtir contributors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end: one subcommand per pipeline mode.
#include <cstdio>
#include <cstring>
#include <exception>
#include <string>

#include "dtir/error.hpp"
#include "dtir/framework.hpp"

namespace {

const char* kUsage =
    "usage: dtir <mode> [--config PATH] [--seed N] [--out DIR]\n"
    "  modes: pretrain | match | finetune | unified | eval | sample\n"
    "  --config PATH   key = value run configuration ('#' comments)\n"
    "  --seed N        override the config seed\n"
    "  --out DIR       override the output directory\n";

bool is_mode(const std::string& s) {
    return s == "pretrain" || s == "match" || s == "finetune" || s == "unified" || s == "eval" || s == "sample";
}

}  // namespace

int main(int argc, char** argv) {
    std::string mode, config_path, out_dir, seed_text;
    if (argc < 2 || !is_mode(argv[1])) {
        std::fputs(kUsage, stderr);
        return 1;
    }
    mode = argv[1];
    for (int i = 2; i < argc; ++i) {
        const std::string arg = argv[i];
        const bool has_next = i + 1 < argc;
        if (arg == "--config" && has_next)
            config_path = argv[++i];
        else if (arg == "--seed" && has_next)
            seed_text = argv[++i];
        else if (arg == "--out" && has_next)
            out_dir = argv[++i];
        else {
            std::fprintf(stderr, "unrecognized or incomplete argument: %s\n%s", arg.c_str(), kUsage);
            return 1;
        }
    }
    try {
        dtir::RunConfig cfg = config_path.empty() ? dtir::RunConfig{} : dtir::load_config(config_path);
        if (cfg.tasks.empty())
            cfg.tasks = {dtir::Degradation::parse("gaussian-noise:0.1"), dtir::Degradation::parse("mask:0.25"),
                         dtir::Degradation::parse("blur:3")};
        cfg.mode = mode;
        if (!seed_text.empty()) {
            try {
                size_t used = 0;
                cfg.seed = std::stoull(seed_text, &used);
                if (used != seed_text.size() || seed_text[0] == '-') throw std::exception();
            } catch (...) {
                std::fprintf(stderr, "--seed expects a nonnegative integer, got '%s'\n", seed_text.c_str());
                return 1;
            }
        }
        if (!out_dir.empty()) cfg.out_dir = out_dir;
        dtir::run_framework(cfg);
        return 0;
    } catch (const dtir::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}
