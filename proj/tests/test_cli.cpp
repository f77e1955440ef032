// Copyright (c) 2026 dtir contributors
// SPDX-License-Identifier: Apache-2.0
//
// End-to-end checks of the command-line binary: exit codes, usage text,
// run determinism, and the artifact manifest.  The binary path arrives via
// the DTIR_BIN environment variable (set by CTest).
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

std::string dtir_bin() {
    const char* p = std::getenv("DTIR_BIN");
    REQUIRE(p != nullptr);
    return p;
}

struct CliResult {
    int exit_code = -1;
    std::string output;  // stdout + stderr interleaved
};

// Runs the binary with the given argument string, capturing output.
CliResult run_cli(const std::string& args) {
    const std::string log = (fs::temp_directory_path() / "dtir_cli_log.txt").string();
    const std::string cmd = dtir_bin() + " " + args + " > " + log + " 2>&1";
    const int status = std::system(cmd.c_str());
    CliResult r;
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream f(log);
    std::stringstream ss;
    ss << f.rdbuf();
    r.output = ss.str();
    return r;
}

std::string slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    REQUIRE(f.good());
    return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

void spit(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    f.write(text.data(), std::streamsize(text.size()));
}

// A configuration small enough for sub-minute end-to-end runs.
std::string toy_config() {
    return "patch = 8\n"
           "batch = 2\n"
           "depth = 2\n"
           "base_channels = 4\n"
           "embed_dim = 8\n"
           "n_experts = 2\n"
           "adapter_dim = 2\n"
           "pretrain_steps = 30\n"
           "importance_steps = 4\n"
           "steps = 10\n"
           "eval_interval = 5\n"
           "lr = 1e-3\n"
           "n_train = 16\n"
           "n_eval = 2\n"
           "n_samples = 2\n"
           "match_pairs = 16\n"
           "tasks = gaussian-noise:0.1\n";
}

// Fresh scratch directory for one test case.
fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("dtir_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("unknown subcommand exits 1 and prints the usage text") {
    const CliResult r = run_cli("frobnicate");
    CHECK(r.exit_code == 1);
    CHECK(r.output.find("usage:") != std::string::npos);
    CHECK(r.output.find("pretrain | match | finetune | unified | eval | sample") != std::string::npos);
}

TEST_CASE("missing mode exits 1 and prints the usage text") {
    const CliResult r = run_cli("");
    CHECK(r.exit_code == 1);
    CHECK(r.output.find("usage:") != std::string::npos);
}

TEST_CASE("incomplete or unknown flags exit 1") {
    CHECK(run_cli("sample --config").exit_code == 1);
    CHECK(run_cli("sample --frobnicate 3").exit_code == 1);
}

TEST_CASE("seed flag rejects non-numeric and negative values") {
    const fs::path dir = scratch("badseed");
    const std::string cfg = (dir / "c.cfg").string();
    spit(cfg, toy_config());
    CHECK(run_cli("sample --config " + cfg + " --seed abc").exit_code == 1);
    CHECK(run_cli("sample --config " + cfg + " --seed -3").exit_code == 1);
}

TEST_CASE("configuration errors exit 1 with a descriptive message") {
    const fs::path dir = scratch("badcfg");
    const std::string cfg = (dir / "c.cfg").string();
    spit(cfg, "frobnicate = 3\n");
    const CliResult r = run_cli("sample --config " + cfg);
    CHECK(r.exit_code == 1);
    CHECK(r.output.find("config error") != std::string::npos);
    CHECK(r.output.find("frobnicate") != std::string::npos);

    spit(cfg, "lambda = -1\n");
    const CliResult r2 = run_cli("sample --config " + cfg);
    CHECK(r2.exit_code == 1);
    CHECK(r2.output.find("lambda") != std::string::npos);
}

TEST_CASE("runtime errors exit 2") {
    // eval with no checkpoint in the output directory cannot proceed
    const fs::path dir = scratch("nomodel");
    const std::string cfg = (dir / "c.cfg").string();
    spit(cfg, toy_config());
    const CliResult r = run_cli("eval --config " + cfg + " --out " + (dir / "out").string());
    CHECK(r.exit_code == 2);
    CHECK(r.output.find("error") != std::string::npos);
}

TEST_CASE("sample runs with equal seeds produce byte-identical images") {
    const fs::path dir = scratch("sampledet");
    const std::string cfg = (dir / "c.cfg").string();
    spit(cfg, toy_config());
    const std::string out_a = (dir / "a").string();
    const std::string out_b = (dir / "b").string();
    REQUIRE(run_cli("sample --config " + cfg + " --seed 7 --out " + out_a).exit_code == 0);
    REQUIRE(run_cli("sample --config " + cfg + " --seed 7 --out " + out_b).exit_code == 0);
    for (int i = 0; i < 2; ++i) {
        const std::string name = "sample_" + std::to_string(i) + ".pgm";
        CHECK(slurp(out_a + "/" + name) == slurp(out_b + "/" + name));
    }
    // a different seed perturbs the chain (and therefore the images)
    const std::string out_c = (dir / "c").string();
    REQUIRE(run_cli("sample --config " + cfg + " --seed 8 --out " + out_c).exit_code == 0);
    CHECK(slurp(out_a + "/sample_0.pgm") != slurp(out_c + "/sample_0.pgm"));
}

TEST_CASE("every path listed in the manifest exists") {
    const fs::path dir = scratch("manifest");
    const std::string cfg = (dir / "c.cfg").string();
    spit(cfg, toy_config());
    const std::string out = (dir / "out").string();
    REQUIRE(run_cli("sample --config " + cfg + " --seed 3 --out " + out).exit_code == 0);
    std::ifstream mf(out + "/manifest.txt");
    REQUIRE(mf.good());
    std::string line;
    int n = 0;
    while (std::getline(mf, line)) {
        if (line.empty()) continue;
        CHECK(fs::exists(fs::path(out) / line));
        ++n;
    }
    CHECK(n >= 3);  // pretrained.ckpt + two sample images
}

TEST_CASE("match mode writes one report per task and records the matched step") {
    const fs::path dir = scratch("match");
    const std::string cfg = (dir / "c.cfg").string();
    spit(cfg, toy_config() + "tasks = gaussian-noise:0.1, mask:0.25\n");
    const std::string out = (dir / "out").string();
    REQUIRE(run_cli("match --config " + cfg + " --seed 5 --out " + out).exit_code == 0);
    for (const std::string name : {"match_gaussian-noise-0.1.csv", "match_mask-0.25.csv"}) {
        const std::string text = slurp(out + "/" + name);
        CHECK(text.find("t,error") != std::string::npos);
        CHECK(text.find("t_mat,") != std::string::npos);
    }
}

TEST_CASE("checkpoints are reused across runs sharing an output directory") {
    const fs::path dir = scratch("reuse");
    const std::string cfg = (dir / "c.cfg").string();
    spit(cfg, toy_config());
    const std::string out = (dir / "out").string();
    REQUIRE(run_cli("pretrain --config " + cfg + " --seed 11 --out " + out).exit_code == 0);
    const std::string before = slurp(out + "/pretrained.ckpt");
    // the second run loads the existing checkpoint instead of retraining
    REQUIRE(run_cli("sample --config " + cfg + " --seed 11 --out " + out).exit_code == 0);
    CHECK(slurp(out + "/pretrained.ckpt") == before);
    CHECK(fs::exists(out + "/sample_0.pgm"));
}
