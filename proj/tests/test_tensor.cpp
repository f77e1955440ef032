// Copyright (c) 2026 dtir contributors
// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "dtir/error.hpp"
#include "dtir/finite_diff.hpp"
#include "dtir/ops.hpp"
#include "dtir/rng.hpp"
#include "dtir/tensor.hpp"

using namespace dtir;

namespace {

Tensor make(const Shape& shape, std::vector<float> vals, bool rg = false) {
    Tensor t = Tensor::from_data(shape, std::move(vals));
    t.set_requires_grad(rg);
    return t;
}

Tensor random_tensor(Rng& rng, const Shape& shape, double lo, double hi, bool rg) {
    Tensor t = Tensor::zeros(shape);
    for (int64_t i = 0; i < t.numel(); ++i) t.data()[i] = static_cast<float>(rng.uniform(lo, hi));
    t.set_requires_grad(rg);
    return t;
}

// Push values away from a non-differentiable point at 0 (relu/abs kinks),
// keeping the central-difference stencil on one side.
void apply_margin(Tensor& t, double margin) {
    for (int64_t i = 0; i < t.numel(); ++i) {
        float& v = t.data()[i];
        if (std::fabs(v) < margin) v = v < 0 ? -float(margin) : float(margin);
    }
}

struct GradCase {
    std::vector<Tensor> inputs;  // requires_grad leaves
    std::function<Tensor()> root;  // taped scalar built from inputs
};

// Autodiff vs central differences on `cases` random draws. Relative error
// per element must stay under 1e-3 (f32 storage, h = 1e-3).
void gradcheck(const char* op_name, int cases,
               const std::function<GradCase(Rng&)>& make_case) {
    Rng rng(derive_seed(1234, op_name));
    double worst = 0.0;
    for (int c = 0; c < cases; ++c) {
        GradCase gc = make_case(rng);
        for (auto& in : gc.inputs) in.zero_grad();
        Tensor root = gc.root();
        REQUIRE(root.numel() == 1);
        backward(root);
        for (size_t j = 0; j < gc.inputs.size(); ++j) {
            Tensor& x = gc.inputs[j];
            Tensor ad = x.grad();
            Tensor fd = finite_diff_grad(
                [&](const Tensor&) { return gc.root().item(); }, x, 1e-3);
            for (int64_t i = 0; i < x.numel(); ++i) {
                const double a = ad.data()[i];
                const double f = fd.data()[i];
                const double rel = std::fabs(a - f) / std::max({1.0, std::fabs(a), std::fabs(f)});
                worst = std::max(worst, rel);
                if (rel >= 1e-3) {
                    CAPTURE(op_name);
                    CAPTURE(c);
                    CAPTURE(j);
                    CAPTURE(i);
                    CAPTURE(a);
                    CAPTURE(f);
                    REQUIRE(rel < 1e-3);
                }
            }
        }
    }
    INFO(op_name << " worst rel err " << worst);
    CHECK(worst < 1e-3);
}

// Scalar probe: mean(out * W) with W a fixed constant, so gradients are not
// uniform across elements.
Tensor probe(const Tensor& out, const Tensor& w) { return mean(mul(out, w)); }

}  // namespace

TEST_CASE("forward values: elementwise and activations") {
    Tensor r = relu(make({3}, {-1.0f, 0.0f, 2.0f}));
    CHECK(r.data()[0] == 0.0f);
    CHECK(r.data()[1] == 0.0f);
    CHECK(r.data()[2] == 2.0f);

    Tensor s = sigmoid(make({1}, {0.0f}));
    CHECK(s.data()[0] == doctest::Approx(0.5));

    Tensor si = silu(make({1}, {0.0f}));
    CHECK(si.data()[0] == doctest::Approx(0.0));

    Tensor a = add(make({2}, {1.0f, 2.0f}), make({2}, {3.0f, 4.0f}));
    CHECK(a.data()[0] == 4.0f);
    CHECK(a.data()[1] == 6.0f);

    Tensor q = square(make({2}, {3.0f, -2.0f}));
    CHECK(q.data()[0] == 9.0f);
    CHECK(q.data()[1] == 4.0f);

    Tensor sq = dtir::sqrt(make({1}, {16.0f}));
    CHECK(sq.data()[0] == doctest::Approx(4.0));

    Tensor ab = dtir::abs(make({2}, {-1.5f, 2.5f}));
    CHECK(ab.data()[0] == 1.5f);

    Tensor rc = recip(make({2}, {2.0f, -4.0f}));
    CHECK(rc.data()[0] == doctest::Approx(0.5));
    CHECK(rc.data()[1] == doctest::Approx(-0.25));
}

TEST_CASE("forward values: matmul identity and conv2d hand case") {
    Tensor I3 = make({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1});
    Tensor A = make({3, 3}, {1, 2, 3, 4, 5, 6, 7, 8, 9});
    Tensor P = matmul(I3, A);
    for (int i = 0; i < 9; ++i) CHECK(P.data()[i] == A.data()[i]);

    // 3x3 input of ones, 1x1 kernel [2] -> 3x3 of twos.
    Tensor x = Tensor::full({1, 1, 3, 3}, 1.0);
    Tensor w = make({1, 1, 1, 1}, {2.0f});
    Tensor y = conv2d(x, w);
    for (int i = 0; i < 9; ++i) CHECK(y.data()[i] == doctest::Approx(2.0));

    // 3x3 kernel of ones on a centered impulse: zero padding makes the
    // output the kernel footprint.
    Tensor imp = Tensor::zeros({1, 1, 3, 3});
    imp.data()[4] = 1.0f;
    Tensor w3 = Tensor::full({1, 1, 3, 3}, 1.0);
    Tensor y3 = conv2d(imp, w3);
    for (int i = 0; i < 9; ++i) CHECK(y3.data()[i] == doctest::Approx(1.0));
}

TEST_CASE("forward values: reductions and distances") {
    Tensor x = make({4}, {1, 2, 3, 4});
    CHECK(sum(x).item() == doctest::Approx(10.0));
    CHECK(mean(x).item() == doctest::Approx(2.5));
    CHECK(l2_norm(make({2}, {3, 4})).item() == doctest::Approx(5.0));
    // l1-distance is the MEAN absolute difference.
    Tensor a = make({2}, {1, 2});
    Tensor b = make({2}, {2, 0});
    CHECK(l1_distance(a, b).item() == doctest::Approx(1.5));
}

TEST_CASE("forward values: shape ops") {
    Tensor x = make({2, 3}, {1, 2, 3, 4, 5, 6});
    Tensor r = reshape(x, {3, 2});
    CHECK(r.dim(0) == 3);
    CHECK(r.data()[5] == 6.0f);

    Tensor s = slice(x, 1, 1, 2);
    CHECK(s.shape() == Shape{2, 2});
    CHECK(s.data()[0] == 2.0f);
    CHECK(s.data()[3] == 6.0f);

    Tensor c = concat(x, x, 0);
    CHECK(c.shape() == Shape{4, 3});
    Tensor c1 = concat(x, x, 1);
    CHECK(c1.shape() == Shape{2, 6});
    CHECK(c1.data()[3] == 1.0f);

    Tensor t = transpose(x);
    CHECK(t.shape() == Shape{3, 2});
    CHECK(t.data()[1] == 4.0f);
}

TEST_CASE("forward values: resampling") {
    Tensor x = make({1, 1, 2, 2}, {1, 2, 3, 4});
    Tensor up = upsample_nearest2(x);
    CHECK(up.shape() == Shape{1, 1, 4, 4});
    CHECK(up.data()[0] == 1.0f);
    CHECK(up.data()[1] == 1.0f);
    CHECK(up.data()[2] == 2.0f);
    CHECK(up.data()[5] == 1.0f);
    CHECK(up.data()[10] == 4.0f);
    Tensor down = avgpool2(up);
    for (int i = 0; i < 4; ++i) CHECK(down.data()[i] == doctest::Approx(x.data()[i]));
    CHECK(avgpool2(x).item() == doctest::Approx(2.5));
}

TEST_CASE("forward values: broadcast helpers") {
    Tensor x = make({2, 3}, {0, 0, 0, 1, 1, 1});
    Tensor v = make({3}, {1, 2, 3});
    Tensor y = add_row(x, v);
    CHECK(y.data()[0] == 1.0f);
    CHECK(y.data()[5] == 4.0f);

    Tensor img = Tensor::full({2, 2, 2, 2}, 1.0);
    Tensor ch = make({2, 2}, {1, 2, 3, 4});
    Tensor z = add_channel(img, ch);
    CHECK(z.data()[0] == 2.0f);   // item 0, channel 0
    CHECK(z.data()[4] == 3.0f);   // item 0, channel 1
    CHECK(z.data()[8] == 4.0f);   // item 1, channel 0

    Tensor rows = make({2, 2}, {1, 2, 3, 4});
    Tensor sc = make({2}, {2, 10});
    Tensor scaled = scale_rows(rows, sc);
    CHECK(scaled.data()[0] == 2.0f);
    CHECK(scaled.data()[3] == 40.0f);
}

TEST_CASE("softmax rows sum to one and match hand case") {
    Rng rng(7);
    Tensor x = random_tensor(rng, {4, 6}, -3.0, 3.0, false);
    Tensor y = softmax(x);
    for (int r = 0; r < 4; ++r) {
        double s = 0.0;
        for (int c = 0; c < 6; ++c) s += y.data()[r * 6 + c];
        CHECK(s == doctest::Approx(1.0).epsilon(1e-6));
    }
    Tensor z = softmax(make({2}, {0.0f, 0.0f}));
    CHECK(z.data()[0] == doctest::Approx(0.5));
}

TEST_CASE("shape errors") {
    CHECK_THROWS_AS(add(Tensor::zeros({2}), Tensor::zeros({3})), ShapeError);
    CHECK_THROWS_AS(matmul(Tensor::zeros({2, 3}), Tensor::zeros({2, 3})), ShapeError);
    CHECK_THROWS_AS(conv2d(Tensor::zeros({1, 1, 4, 4}), Tensor::zeros({1, 1, 2, 2})), ShapeError);
    CHECK_THROWS_AS(avgpool2(Tensor::zeros({1, 1, 3, 3})), ShapeError);
    CHECK_THROWS_AS(reshape(Tensor::zeros({4}), Shape{3}), ShapeError);
    CHECK_THROWS_AS(slice(Tensor::zeros({4}), 0, 2, 5), ShapeError);
}

TEST_CASE("non-finite results fail fast") {
    CHECK_THROWS_AS(dtir::log(make({1}, {0.0f})), NumericsError);
    CHECK_THROWS_AS(dtir::log(make({1}, {-1.0f})), NumericsError);
    CHECK_THROWS_AS(dtir::sqrt(make({1}, {-1.0f})), NumericsError);
    CHECK_THROWS_AS(recip(make({1}, {0.0f})), NumericsError);
    CHECK_THROWS_AS(dtir::exp(make({1}, {200.0f})), NumericsError);
    CHECK_THROWS_AS(mul(make({1}, {1e30f}), make({1}, {1e30f})), NumericsError);
}

TEST_CASE("backward: analytic spot checks") {
    Tensor x = make({2}, {1, 2}, true);
    backward(sum(square(x)));
    CHECK(x.grad().data()[0] == doctest::Approx(2.0));
    CHECK(x.grad().data()[1] == doctest::Approx(4.0));

    Tensor y = make({4}, {1, 2, 3, 4}, true);
    backward(mean(y));
    for (int i = 0; i < 4; ++i) CHECK(y.grad().data()[i] == doctest::Approx(0.25));
}

TEST_CASE("backward: constant root writes no grads and non-scalar throws") {
    Tensor c = Tensor::scalar(3.0);
    CHECK_NOTHROW(backward(c));

    Tensor x = make({2}, {1, 2}, true);
    CHECK_THROWS_AS(backward(square(x)), ContractError);
}

TEST_CASE("backward: diamond graph sums both paths") {
    Tensor x = make({3}, {0.3f, -0.7f, 1.1f}, true);
    // Two distinct paths from x to the root.
    Tensor root = add(sum(square(x)), mean(mul(x, x)));
    backward(root);
    for (int i = 0; i < 3; ++i) {
        const double expect = 2.0 * x.data()[i] + 2.0 * x.data()[i] / 3.0;
        CHECK(x.grad().data()[i] == doctest::Approx(expect).epsilon(1e-5));
    }
}

TEST_CASE("backward: repeated calls accumulate, zero_grad resets") {
    Tensor x = make({2}, {1, 2}, true);
    backward(sum(square(x)));
    backward(sum(square(x)));
    CHECK(x.grad().data()[0] == doctest::Approx(4.0));
    x.zero_grad();
    CHECK_FALSE(x.has_grad());
    backward(sum(square(x)));
    CHECK(x.grad().data()[0] == doctest::Approx(2.0));
}

TEST_CASE("NoTape disables recording") {
    Tensor x = make({2}, {1, 2}, true);
    Tensor y;
    {
        NoTape guard;
        y = sum(square(x));
    }
    backward(y);  // constant root: no grads written
    CHECK_FALSE(x.has_grad());
}

TEST_CASE("functional grad and double backward") {
    Tensor x = make({3}, {0.5f, -1.0f, 2.0f}, true);
    Tensor f = sum(square(x));
    std::vector<Tensor> g = grad(f, {x}, /*create_graph=*/true);
    REQUIRE(g.size() == 1);
    for (int i = 0; i < 3; ++i) CHECK(g[0].data()[i] == doctest::Approx(2.0 * x.data()[i]));
    CHECK_FALSE(x.has_grad());  // functional variant leaves buffers alone

    // d/dx sum(g^2) = d/dx sum(4 x^2) = 8x.
    backward(sum(square(g[0])));
    for (int i = 0; i < 3; ++i) CHECK(x.grad().data()[i] == doctest::Approx(8.0 * x.data()[i]));
}

TEST_CASE("conv2d rejects create_graph") {
    Tensor x = random_tensor(Rng(3) = Rng(3), {1, 1, 4, 4}, -1, 1, true);
    Tensor w = Tensor::full({1, 1, 3, 3}, 0.1);
    w.set_requires_grad(true);
    Tensor f = mean(conv2d(x, w));
    CHECK_THROWS_AS(grad(f, {x}, true), ContractError);
}

TEST_CASE("grad of unreachable parameter is zeros") {
    Tensor x = make({2}, {1, 2}, true);
    Tensor y = make({2}, {3, 4}, true);
    std::vector<Tensor> g = grad(sum(square(x)), {y});
    CHECK(g[0].data()[0] == 0.0f);
    CHECK(g[0].data()[1] == 0.0f);
}

// ---------------------------------------------------------------------------
// Gradient property tests: every op, >= 100 random cases against central
// finite differences.
// ---------------------------------------------------------------------------

TEST_CASE("gradcheck: add/sub/mul") {
    auto bin = [](Tensor (*op)(const Tensor&, const Tensor&)) {
        return [op](Rng& rng) {
            GradCase gc;
            gc.inputs = {random_tensor(rng, {2, 5}, -1, 1, true),
                         random_tensor(rng, {2, 5}, -1, 1, true)};
            Tensor w = random_tensor(rng, {2, 5}, -1, 1, false);
            gc.root = [=] { return probe(op(gc.inputs[0], gc.inputs[1]), w); };
            return gc;
        };
    };
    gradcheck("add", 100, bin(&add));
    gradcheck("sub", 100, bin(&sub));
    gradcheck("mul", 100, bin(&mul));
}

TEST_CASE("gradcheck: scalar_mul and smul_t") {
    gradcheck("scalar_mul", 100, [](Rng& rng) {
        GradCase gc;
        gc.inputs = {random_tensor(rng, {7}, -1, 1, true)};
        const double c = rng.uniform(-2.0, 2.0);
        Tensor w = random_tensor(rng, {7}, -1, 1, false);
        gc.root = [=] { return probe(scalar_mul(gc.inputs[0], c), w); };
        return gc;
    });
    gradcheck("smul_t", 100, [](Rng& rng) {
        GradCase gc;
        gc.inputs = {random_tensor(rng, {6}, -1, 1, true),
                     random_tensor(rng, {1}, -1, 1, true)};
        Tensor w = random_tensor(rng, {6}, -1, 1, false);
        gc.root = [=] { return probe(smul_t(gc.inputs[0], gc.inputs[1]), w); };
        return gc;
    });
}

TEST_CASE("gradcheck: smooth unaries") {
    auto unary = [](Tensor (*op)(const Tensor&), double lo, double hi) {
        return [op, lo, hi](Rng& rng) {
            GradCase gc;
            gc.inputs = {random_tensor(rng, {3, 4}, lo, hi, true)};
            Tensor w = random_tensor(rng, {3, 4}, -1, 1, false);
            gc.root = [=] { return probe(op(gc.inputs[0]), w); };
            return gc;
        };
    };
    gradcheck("silu", 100, unary(&silu, -1, 1));
    gradcheck("sigmoid", 100, unary(&sigmoid, -1, 1));
    gradcheck("square", 100, unary(&square, -1, 1));
    gradcheck("exp", 100, unary(&dtir::exp, -1, 1));
    // Domain-restricted ops run on shifted ranges.
    gradcheck("sqrt", 100, unary(&dtir::sqrt, 0.25, 2.0));
    gradcheck("log", 100, unary(&dtir::log, 0.5, 2.5));
}

TEST_CASE("gradcheck: kinked unaries with margin") {
    auto kinked = [](Tensor (*op)(const Tensor&)) {
        return [op](Rng& rng) {
            GradCase gc;
            Tensor x = random_tensor(rng, {3, 4}, -1, 1, true);
            apply_margin(x, 0.05);
            gc.inputs = {x};
            Tensor w = random_tensor(rng, {3, 4}, -1, 1, false);
            gc.root = [=] { return probe(op(gc.inputs[0]), w); };
            return gc;
        };
    };
    gradcheck("relu", 100, kinked(&relu));
    gradcheck("abs", 100, kinked(&dtir::abs));
}

TEST_CASE("gradcheck: recip away from zero") {
    gradcheck("recip", 100, [](Rng& rng) {
        GradCase gc;
        Tensor x = random_tensor(rng, {3, 3}, 0.5, 1.5, true);
        for (int64_t i = 0; i < x.numel(); ++i)
            if (rng.uniform() < 0.5) x.data()[i] = -x.data()[i];
        gc.inputs = {x};
        Tensor w = random_tensor(rng, {3, 3}, -1, 1, false);
        gc.root = [=] { return probe(recip(gc.inputs[0]), w); };
        return gc;
    });
}

TEST_CASE("gradcheck: softmax") {
    gradcheck("softmax", 100, [](Rng& rng) {
        GradCase gc;
        gc.inputs = {random_tensor(rng, {3, 5}, -1, 1, true)};
        Tensor w = random_tensor(rng, {3, 5}, -1, 1, false);
        gc.root = [=] { return probe(softmax(gc.inputs[0]), w); };
        return gc;
    });
}

TEST_CASE("gradcheck: reductions") {
    gradcheck("sum", 100, [](Rng& rng) {
        GradCase gc;
        gc.inputs = {random_tensor(rng, {11}, -1, 1, true)};
        gc.root = [=] { return scalar_mul(sum(gc.inputs[0]), 0.1); };
        return gc;
    });
    gradcheck("mean", 100, [](Rng& rng) {
        GradCase gc;
        gc.inputs = {random_tensor(rng, {4, 4}, -1, 1, true)};
        gc.root = [=] { return mean(gc.inputs[0]); };
        return gc;
    });
    gradcheck("l2_norm", 100, [](Rng& rng) {
        GradCase gc;
        Tensor x = random_tensor(rng, {8}, -1, 1, true);
        // Kink at the origin: keep the vector norm away from 0.
        double n2 = 0.0;
        for (int64_t i = 0; i < x.numel(); ++i) n2 += double(x.data()[i]) * x.data()[i];
        if (n2 < 0.25) x.data()[0] += 1.0f;
        gc.inputs = {x};
        gc.root = [=] { return l2_norm(gc.inputs[0]); };
        return gc;
    });
    gradcheck("l1_distance", 100, [](Rng& rng) {
        GradCase gc;
        Tensor a = random_tensor(rng, {9}, -1, 1, true);
        Tensor b = random_tensor(rng, {9}, -1, 1, true);
        // |a-b| kink: enforce a gap per element.
        for (int64_t i = 0; i < a.numel(); ++i) {
            const double d = double(a.data()[i]) - b.data()[i];
            if (std::fabs(d) < 0.05) b.data()[i] = a.data()[i] + (d < 0 ? 0.1f : -0.1f);
        }
        gc.inputs = {a, b};
        gc.root = [=] { return l1_distance(gc.inputs[0], gc.inputs[1]); };
        return gc;
    });
}

TEST_CASE("gradcheck: linear algebra") {
    gradcheck("matmul", 100, [](Rng& rng) {
        GradCase gc;
        gc.inputs = {random_tensor(rng, {3, 4}, -1, 1, true),
                     random_tensor(rng, {4, 2}, -1, 1, true)};
        Tensor w = random_tensor(rng, {3, 2}, -1, 1, false);
        gc.root = [=] { return probe(matmul(gc.inputs[0], gc.inputs[1]), w); };
        return gc;
    });
    gradcheck("transpose", 100, [](Rng& rng) {
        GradCase gc;
        gc.inputs = {random_tensor(rng, {3, 4}, -1, 1, true)};
        Tensor w = random_tensor(rng, {4, 3}, -1, 1, false);
        gc.root = [=] { return probe(transpose(gc.inputs[0]), w); };
        return gc;
    });
    gradcheck("add_row", 100, [](Rng& rng) {
        GradCase gc;
        gc.inputs = {random_tensor(rng, {3, 4}, -1, 1, true),
                     random_tensor(rng, {4}, -1, 1, true)};
        Tensor w = random_tensor(rng, {3, 4}, -1, 1, false);
        gc.root = [=] { return probe(add_row(gc.inputs[0], gc.inputs[1]), w); };
        return gc;
    });
}

TEST_CASE("gradcheck: conv2d") {
    gradcheck("conv2d_k3", 100, [](Rng& rng) {
        GradCase gc;
        gc.inputs = {random_tensor(rng, {1, 2, 4, 4}, -1, 1, true),
                     random_tensor(rng, {2, 2, 3, 3}, -1, 1, true),
                     random_tensor(rng, {2}, -1, 1, true)};
        Tensor w = random_tensor(rng, {1, 2, 4, 4}, -1, 1, false);
        gc.root = [=] { return probe(conv2d(gc.inputs[0], gc.inputs[1], gc.inputs[2]), w); };
        return gc;
    });
    gradcheck("conv2d_k1", 100, [](Rng& rng) {
        GradCase gc;
        gc.inputs = {random_tensor(rng, {2, 2, 3, 3}, -1, 1, true),
                     random_tensor(rng, {3, 2, 1, 1}, -1, 1, true)};
        Tensor w = random_tensor(rng, {2, 3, 3, 3}, -1, 1, false);
        gc.root = [=] { return probe(conv2d(gc.inputs[0], gc.inputs[1]), w); };
        return gc;
    });
}

TEST_CASE("gradcheck: batch helpers") {
    gradcheck("add_channel", 100, [](Rng& rng) {
        GradCase gc;
        gc.inputs = {random_tensor(rng, {2, 3, 2, 2}, -1, 1, true),
                     random_tensor(rng, {2, 3}, -1, 1, true)};
        Tensor w = random_tensor(rng, {2, 3, 2, 2}, -1, 1, false);
        gc.root = [=] { return probe(add_channel(gc.inputs[0], gc.inputs[1]), w); };
        return gc;
    });
    gradcheck("scale_rows", 100, [](Rng& rng) {
        GradCase gc;
        gc.inputs = {random_tensor(rng, {3, 2, 2}, -1, 1, true),
                     random_tensor(rng, {3}, -1, 1, true)};
        Tensor w = random_tensor(rng, {3, 2, 2}, -1, 1, false);
        gc.root = [=] { return probe(scale_rows(gc.inputs[0], gc.inputs[1]), w); };
        return gc;
    });
}

TEST_CASE("gradcheck: shape ops") {
    gradcheck("reshape", 100, [](Rng& rng) {
        GradCase gc;
        gc.inputs = {random_tensor(rng, {2, 6}, -1, 1, true)};
        Tensor w = random_tensor(rng, {3, 4}, -1, 1, false);
        gc.root = [=] { return probe(reshape(gc.inputs[0], {3, 4}), w); };
        return gc;
    });
    gradcheck("slice", 100, [](Rng& rng) {
        GradCase gc;
        gc.inputs = {random_tensor(rng, {4, 5}, -1, 1, true)};
        const int axis = rng.uniform() < 0.5 ? 0 : 1;
        const int64_t extent = axis == 0 ? 4 : 5;
        const int64_t len = 1 + int64_t(rng.uniform_index(uint64_t(extent)));
        const int64_t start = int64_t(rng.uniform_index(uint64_t(extent - len + 1)));
        Shape out_shape = axis == 0 ? Shape{len, 5} : Shape{4, len};
        Tensor w = random_tensor(rng, out_shape, -1, 1, false);
        gc.root = [=] { return probe(slice(gc.inputs[0], axis, start, len), w); };
        return gc;
    });
    gradcheck("concat", 100, [](Rng& rng) {
        GradCase gc;
        gc.inputs = {random_tensor(rng, {2, 3}, -1, 1, true),
                     random_tensor(rng, {2, 3}, -1, 1, true)};
        const int axis = rng.uniform() < 0.5 ? 0 : 1;
        Shape out_shape = axis == 0 ? Shape{4, 3} : Shape{2, 6};
        Tensor w = random_tensor(rng, out_shape, -1, 1, false);
        gc.root = [=] { return probe(concat(gc.inputs[0], gc.inputs[1], axis), w); };
        return gc;
    });
}

TEST_CASE("gradcheck: resampling") {
    gradcheck("upsample_nearest2", 100, [](Rng& rng) {
        GradCase gc;
        gc.inputs = {random_tensor(rng, {1, 2, 3, 3}, -1, 1, true)};
        Tensor w = random_tensor(rng, {1, 2, 6, 6}, -1, 1, false);
        gc.root = [=] { return probe(upsample_nearest2(gc.inputs[0]), w); };
        return gc;
    });
    gradcheck("avgpool2", 100, [](Rng& rng) {
        GradCase gc;
        gc.inputs = {random_tensor(rng, {1, 2, 4, 4}, -1, 1, true)};
        Tensor w = random_tensor(rng, {1, 2, 2, 2}, -1, 1, false);
        gc.root = [=] { return probe(avgpool2(gc.inputs[0]), w); };
        return gc;
    });
}

TEST_CASE("finite_diff_grad sanity") {
    Tensor x = make({2}, {1, 2});
    Tensor g = finite_diff_grad([](const Tensor& t) {
        double s = 0.0;
        for (int64_t i = 0; i < t.numel(); ++i) s += double(t.data()[i]) * t.data()[i];
        return s;
    }, x);
    CHECK(g.data()[0] == doctest::Approx(2.0).epsilon(1e-4));
    CHECK(g.data()[1] == doctest::Approx(4.0).epsilon(1e-4));

    Tensor c = finite_diff_grad([](const Tensor&) { return 42.0; }, x);
    CHECK(c.data()[0] == 0.0f);

    Tensor z = make({1}, {0.0f});
    Tensor ge = finite_diff_grad([](const Tensor& t) { return std::exp(double(t.data()[0])); }, z);
    CHECK(ge.data()[0] == doctest::Approx(1.0).epsilon(1e-4));
}
