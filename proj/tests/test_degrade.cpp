// Copyright (c) 2026 dtir contributors
// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include "dtir/degrade.hpp"
#include "dtir/error.hpp"
#include "dtir/image_io.hpp"
#include "dtir/metrics.hpp"
#include "dtir/rng.hpp"

using namespace dtir;

namespace {

Tensor constant_image(float v, const Shape& chw = {1, 8, 8}) {
    Tensor t = Tensor::zeros(chw);
    for (int64_t i = 0; i < t.numel(); ++i) t.data()[i] = v;
    return t;
}

double mse(const Tensor& a, const Tensor& b) {
    double acc = 0.0;
    for (int64_t i = 0; i < a.numel(); ++i) {
        const double d = double(a.data()[i]) - double(b.data()[i]);
        acc += d * d;
    }
    return acc / double(a.numel());
}

}  // namespace

TEST_CASE("procedural images are deterministic, in range, and distinct") {
    auto a = make_clean(99, 4, {1, 16, 16});
    auto b = make_clean(99, 4, {1, 16, 16});
    REQUIRE(a.size() == 4);
    for (size_t i = 0; i < a.size(); ++i) {
        CHECK(std::memcmp(a[i].data(), b[i].data(), sizeof(float) * size_t(a[i].numel())) == 0);
        for (int64_t k = 0; k < a[i].numel(); ++k) {
            CHECK(a[i].data()[k] >= 0.0f);
            CHECK(a[i].data()[k] <= 1.0f);
        }
    }
    CHECK(mse(a[0], a[1]) > 0.0);
    CHECK_THROWS_AS(make_clean(99, 0, {1, 16, 16}), ContractError);
}

TEST_CASE("degradations are deterministic under a fixed seed") {
    auto cleans = make_clean(7, 1, {1, 16, 16});
    for (const char* tag : {"gaussian-noise:0.1", "mask:0.3", "darken:0.5:1.2", "blur:3", "streaks:6:0.8"}) {
        Degradation d = Degradation::parse(tag);
        Tensor y1 = degrade(cleans[0], d, 42);
        Tensor y2 = degrade(cleans[0], d, 42);
        INFO("tag ", tag);
        CHECK(std::memcmp(y1.data(), y2.data(), sizeof(float) * size_t(y1.numel())) == 0);
        for (int64_t k = 0; k < y1.numel(); ++k) {
            CHECK(y1.data()[k] >= 0.0f);
            CHECK(y1.data()[k] <= 1.0f);
        }
    }
}

TEST_CASE("zero-strength noise and mask leave the image untouched") {
    auto cleans = make_clean(5, 1, {1, 16, 16});
    Tensor yn = degrade(cleans[0], Degradation::parse("gaussian-noise:0"), 3);
    Tensor ym = degrade(cleans[0], Degradation::parse("mask:0"), 3);
    for (int64_t k = 0; k < cleans[0].numel(); ++k) {
        CHECK(yn.data()[k] == cleans[0].data()[k]);
        CHECK(ym.data()[k] == cleans[0].data()[k]);
    }
}

TEST_CASE("full mask blacks the image out") {
    auto cleans = make_clean(5, 1, {1, 16, 16});
    Tensor y = degrade(cleans[0], Degradation::parse("mask:1"), 3);
    for (int64_t k = 0; k < y.numel(); ++k) CHECK(y.data()[k] == 0.0f);
}

TEST_CASE("linear dimming halves a constant image") {
    Tensor c = constant_image(0.8f);
    Tensor y = degrade(c, Degradation::parse("darken:0.5:1"), 0);
    for (int64_t k = 0; k < y.numel(); ++k) CHECK(y.data()[k] == doctest::Approx(0.4f).epsilon(1e-6));
}

TEST_CASE("mask and darken are 1-Lipschitz in the clean image") {
    auto a = make_clean(11, 1, {1, 16, 16});
    auto b = make_clean(12, 1, {1, 16, 16});
    for (const char* tag : {"mask:0.4", "darken:0.7:1.6"}) {
        Degradation d = Degradation::parse(tag);
        Tensor ya = degrade(a[0], d, 5);
        Tensor yb = degrade(b[0], d, 5);
        for (int64_t k = 0; k < ya.numel(); ++k) {
            const double dout = std::fabs(double(ya.data()[k]) - double(yb.data()[k]));
            const double din = std::fabs(double(a[0].data()[k]) - double(b[0].data()[k]));
            INFO("tag ", tag, " pixel ", k);
            CHECK(dout <= din + 1e-6);
        }
    }
}

TEST_CASE("noise severity increases mean squared error") {
    auto cleans = make_clean(21, 32, {1, 16, 16});
    double prev = -1.0;
    for (double sigma : {0.02, 0.05, 0.1, 0.2}) {
        Degradation d;
        d.kind = DegradationKind::GaussianNoise;
        d.p1 = sigma;
        double acc = 0.0;
        for (size_t i = 0; i < cleans.size(); ++i)
            acc += mse(cleans[i], degrade(cleans[i], d, 100 + uint64_t(i)));
        acc /= double(cleans.size());
        CHECK(acc >= prev);
        prev = acc;
    }
}

TEST_CASE("degradation tags round-trip through the parser") {
    for (const char* tag : {"gaussian-noise:0.1", "mask:0.3", "darken:0.5:1.2", "blur:3", "streaks:12:0.8"}) {
        Degradation d = Degradation::parse(tag);
        Degradation again = Degradation::parse(d.tag());
        CHECK(d.kind == again.kind);
        CHECK(d.p1 == doctest::Approx(again.p1));
        CHECK(d.p2 == doctest::Approx(again.p2));
    }
}

TEST_CASE("parser rejects unknown kinds and invalid parameters") {
    CHECK_THROWS_AS(Degradation::parse("frobnicate:1"), ContractError);
    CHECK_THROWS_AS(Degradation::parse("gaussian-noise:-0.1"), ContractError);
    CHECK_THROWS_AS(Degradation::parse("mask:1.5"), ContractError);
    CHECK_THROWS_AS(Degradation::parse("darken:0:1"), ContractError);
    CHECK_THROWS_AS(Degradation::parse("darken:1.5:1"), ContractError);
    CHECK_THROWS_AS(Degradation::parse("blur:4"), ContractError);
    CHECK_THROWS_AS(Degradation::parse("streaks:-2:0.5"), ContractError);
}

TEST_CASE("datasets split train and eval through disjoint seed streams") {
    TaskSpec task;
    task.kind = Degradation::parse("gaussian-noise:0.2");
    task.dataset_seed = 404;
    task.n_train = 8;
    task.n_eval = 4;
    Dataset ds = make_dataset(task, {1, 16, 16});
    REQUIRE(ds.train.size() == 8);
    REQUIRE(ds.eval.size() == 4);
    for (const auto& ev : ds.eval)
        for (const auto& tr : ds.train)
            CHECK(mse(ev.clean, tr.clean) > 0.0);
    Dataset again = make_dataset(task, {1, 16, 16});
    for (size_t i = 0; i < ds.train.size(); ++i)
        CHECK(std::memcmp(ds.train[i].degraded.data(), again.train[i].degraded.data(),
                          sizeof(float) * size_t(ds.train[i].degraded.numel())) == 0);
}

TEST_CASE("noisy pairs keep a finite distance from their clean source") {
    TaskSpec task;
    task.kind = Degradation::parse("gaussian-noise:0.2");
    task.dataset_seed = 77;
    task.n_train = 4;
    task.n_eval = 4;
    Dataset ds = make_dataset(task, {1, 16, 16});
    for (const auto& p : ds.eval) {
        const double db = psnr(p.degraded, p.clean);
        CHECK(db < 99.0);
        CHECK(db > 5.0);
    }
}

TEST_CASE("single-channel images survive a PGM round trip") {
    auto cleans = make_clean(31, 1, {1, 16, 16});
    const std::string path = "/tmp/dtir_test_roundtrip.pgm";
    write_image(path, cleans[0]);
    Tensor back = read_image(path);
    REQUIRE(back.rank() == 3);
    CHECK(back.dim(0) == 1);
    CHECK(back.dim(1) == 16);
    CHECK(back.dim(2) == 16);
    // 8-bit quantization: half a bin of error at most.
    for (int64_t k = 0; k < back.numel(); ++k)
        CHECK(std::fabs(back.data()[k] - cleans[0].data()[k]) <= 0.5f / 255.0f + 1e-6f);
    std::remove(path.c_str());
}

TEST_CASE("three-channel images survive a PPM round trip") {
    auto cleans = make_clean(33, 1, {3, 8, 8});
    const std::string path = "/tmp/dtir_test_roundtrip.ppm";
    write_image(path, cleans[0]);
    Tensor back = read_image(path);
    REQUIRE(back.rank() == 3);
    CHECK(back.dim(0) == 3);
    for (int64_t k = 0; k < back.numel(); ++k)
        CHECK(std::fabs(back.data()[k] - cleans[0].data()[k]) <= 0.5f / 255.0f + 1e-6f);
    std::remove(path.c_str());
}

TEST_CASE("quantized image bytes are exactly recoverable") {
    // Values on the 8-bit grid come back bit-exact, proving lossless transport.
    Tensor grid = Tensor::zeros({1, 4, 4});
    for (int64_t k = 0; k < grid.numel(); ++k) grid.data()[k] = float(k * 17) / 255.0f;
    const std::string path = "/tmp/dtir_test_grid.pgm";
    write_image(path, grid);
    Tensor back = read_image(path);
    for (int64_t k = 0; k < grid.numel(); ++k)
        CHECK(back.data()[k] == doctest::Approx(grid.data()[k]).epsilon(1e-7));
    std::remove(path.c_str());
}
