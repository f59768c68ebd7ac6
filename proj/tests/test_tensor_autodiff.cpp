#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "scalewave/kernels.hpp"
#include "scalewave/ops.hpp"
#include "scalewave/precision.hpp"
#include "scalewave/tape.hpp"
#include "scalewave/tensor.hpp"
#include "support/gradcheck.hpp"

using namespace scalewave;

namespace {

Tensor random_tensor(Shape shape, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
    Tensor t(std::move(shape));
    std::mt19937_64 rng(seed);
    t.fill_uniform(rng, lo, hi);
    return t;
}

}  // namespace

TEST_CASE("tensor shape and stride invariants") {
    Tensor t(Shape{2, 3, 4});
    CHECK(t.numel() == 24);
    CHECK(t.strides() == std::vector<std::int64_t>{12, 4, 1});
    t.at({1, 2, 3}) = 5.0;
    CHECK(t[23] == 5.0);
    CHECK_THROWS_AS(Tensor(Shape{2, 2}, std::vector<double>{1.0}), Error);
}

TEST_CASE("conv1d identity kernel") {
    Tensor in(Shape{1, 1, 5}, std::vector<double>{0, 0, 1, 0, 0});
    Tensor k(Shape{1, 1, 1}, std::vector<double>{1});
    Tensor out = conv1d_forward(in, k, Conv1dSpec{});
    CHECK(out.shape() == Shape{1, 1, 5});
    for (int i = 0; i < 5; ++i) CHECK(out[i] == in[i]);
}

TEST_CASE("conv1d hand oracle [1,2,3,4] x [1,1]") {
    Tensor in(Shape{1, 1, 4}, std::vector<double>{1, 2, 3, 4});
    Tensor k(Shape{1, 1, 2}, std::vector<double>{1, 1});
    Tensor out = conv1d_forward(in, k, Conv1dSpec{});
    REQUIRE(out.dim(2) == 3);
    CHECK(out[0] == doctest::Approx(3.0));
    CHECK(out[1] == doctest::Approx(5.0));
    CHECK(out[2] == doctest::Approx(7.0));
}

TEST_CASE("conv1d circular padding commutes with circular shifts") {
    std::mt19937_64 rng(7);
    Tensor in = random_tensor(Shape{1, 2, 16}, 3);
    Tensor k = random_tensor(Shape{3, 2, 5}, 4);
    Conv1dSpec spec;
    spec.padding = Padding::circular;
    Tensor out = conv1d_forward(in, k, spec);

    for (std::int64_t t0 : {1, 5, 15}) {
        Tensor shifted(in.shape());
        const std::int64_t T = in.dim(2);
        for (std::int64_t c = 0; c < 2; ++c)
            for (std::int64_t t = 0; t < T; ++t) shifted[c * T + t] = in[c * T + ((t - t0 + 2 * T) % T)];
        Tensor out_shifted = conv1d_forward(shifted, k, spec);
        double max_err = 0.0;
        for (std::int64_t o = 0; o < 3; ++o)
            for (std::int64_t t = 0; t < T; ++t) {
                const double expect = out[o * T + ((t - t0 + 2 * T) % T)];
                max_err = std::max(max_err, std::fabs(out_shifted[o * T + t] - expect));
            }
        CHECK(max_err / out.max_abs() <= 1e-12);
    }
}

TEST_CASE("conv1d rejects oversized kernels with a dimension error") {
    Tensor in(Shape{1, 1, 4}, std::vector<double>{1, 2, 3, 4});
    Tensor k(Shape{1, 1, 7}, 1.0);
    CHECK_THROWS_WITH_AS(conv1d_forward(in, k, Conv1dSpec{}), doctest::Contains("kernel width"), Error);
    Tensor k2(Shape{1, 2, 2}, 1.0);
    CHECK_THROWS_WITH_AS(conv1d_forward(in, k2, Conv1dSpec{}), doctest::Contains("channel axis"), Error);
}

TEST_CASE("backward of sum gives ones; relu subgradient") {
    Tape tape;
    Value x = tape.leaf(Tensor(Shape{3}, std::vector<double>{1, -2, 3}), true);
    Value loss = reduce_sum(tape, x);
    tape.backward(loss);
    for (int i = 0; i < 3; ++i) CHECK(tape.grad(x)[i] == 1.0);

    Tape tape2;
    Value y = tape2.leaf(Tensor(Shape{2}, std::vector<double>{-1, 2}), true);
    Value loss2 = reduce_sum(tape2, relu(tape2, y));
    tape2.backward(loss2);
    CHECK(tape2.grad(y)[0] == 0.0);
    CHECK(tape2.grad(y)[1] == 1.0);
}

TEST_CASE("backward requires a scalar loss") {
    Tape tape;
    Value x = tape.leaf(Tensor(Shape{3}, 1.0), true);
    Value y = relu(tape, x);
    CHECK_THROWS_AS(tape.backward(y), Error);
}

TEST_CASE("maxpool forward example and argmax routing") {
    Tape tape;
    Value x = tape.leaf(Tensor(Shape{1, 1, 4}, std::vector<double>{1, 3, 2, 5}), true);
    Value p = maxpool1d(tape, x, 2, 2);
    CHECK(tape.value(p).shape() == Shape{1, 1, 2});
    CHECK(tape.value(p)[0] == 3.0);
    CHECK(tape.value(p)[1] == 5.0);
    Value loss = reduce_sum(tape, p);
    tape.backward(loss);
    const Tensor& g = tape.grad(x);
    CHECK(g[0] == 0.0);
    CHECK(g[1] == 1.0);
    CHECK(g[2] == 0.0);
    CHECK(g[3] == 1.0);
}

TEST_CASE("softmax cross entropy of uniform logits is ln k") {
    Tape tape;
    Value z = tape.leaf(Tensor(Shape{1, 2}, 0.0), true);
    Value loss = softmax_cross_entropy(tape, z, {0});
    CHECK(tape.value(loss).scalar_value() == doctest::Approx(std::log(2.0)).epsilon(1e-12));

    Tape tape5;
    Value z5 = tape5.leaf(Tensor(Shape{3, 5}, 0.0), true);
    Value loss5 = softmax_cross_entropy(tape5, z5, {0, 3, 4});
    CHECK(tape5.value(loss5).scalar_value() == doctest::Approx(std::log(5.0)).epsilon(1e-12));
}

TEST_CASE("reduce_mean backward spreads 1/n") {
    Tape tape;
    Value x = tape.leaf(Tensor(Shape{4}, std::vector<double>{1, 2, 3, 4}), true);
    Value loss = reduce_mean(tape, x);
    tape.backward(loss);
    for (int i = 0; i < 4; ++i) CHECK(tape.grad(x)[i] == doctest::Approx(0.25));
}

TEST_CASE("batchnorm constant input yields bias; normalized stats") {
    Tape tape;
    Tensor x(Shape{4, 2, 8});
    std::mt19937_64 rng(11);
    x.fill_uniform(rng, -2.0, 2.0);
    for (std::int64_t b = 0; b < 4; ++b)
        for (std::int64_t t = 0; t < 8; ++t) x[(b * 2 + 0) * 8 + t] = 3.0;  // channel 0 constant

    BatchNormState state(2);
    Value xv = tape.leaf(x, false);
    Value gamma = tape.leaf(Tensor(Shape{2}, 1.0), true);
    Value beta = tape.leaf(Tensor(Shape{2}, std::vector<double>{0.5, -0.25}), true);
    Value y = batchnorm1d(tape, xv, gamma, beta, state, true);

    const Tensor& yv = tape.value(y);
    for (std::int64_t b = 0; b < 4; ++b)
        for (std::int64_t t = 0; t < 8; ++t) CHECK(yv[(b * 2 + 0) * 8 + t] == doctest::Approx(0.5).epsilon(1e-9));

    // channel 1: sample mean 0, variance 1 up to the epsilon floor
    double mean = 0.0, var = 0.0;
    for (std::int64_t b = 0; b < 4; ++b)
        for (std::int64_t t = 0; t < 8; ++t) mean += yv[(b * 2 + 1) * 8 + t] - (-0.25);
    mean /= 32.0;
    for (std::int64_t b = 0; b < 4; ++b)
        for (std::int64_t t = 0; t < 8; ++t) {
            const double d = yv[(b * 2 + 1) * 8 + t] - (-0.25) - mean;
            var += d * d;
        }
    var /= 32.0;
    CHECK(std::fabs(mean) <= 1e-6);
    CHECK(var == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("batchnorm eval before training warns and uses init stats") {
    Tape tape;
    BatchNormState state(1);
    Value xv = tape.leaf(Tensor(Shape{1, 1, 4}, std::vector<double>{1, 2, 3, 4}), false);
    Value gamma = tape.leaf(Tensor(Shape{1}, 1.0), false);
    Value beta = tape.leaf(Tensor(Shape{1}, 0.0), false);
    Value y = batchnorm1d(tape, xv, gamma, beta, state, false);
    // init stats: mean 0 var 1 -> output ~ input
    for (int i = 0; i < 4; ++i)
        CHECK(tape.value(y)[i] == doctest::Approx(static_cast<double>(i + 1)).epsilon(1e-4));
}

TEST_CASE("gradient checks: elementwise, dense, reductions") {
    std::mt19937_64 rng(5);

    SUBCASE("add-mul-relu chain") {
        Tensor a = random_tensor(Shape{2, 3}, 21, 0.1, 1.0);
        Tensor b = random_tensor(Shape{2, 3}, 22, 0.2, 1.2);
        auto run = [](const std::vector<Tensor>& in, Tape& tape, std::vector<Value>& leaves) {
            leaves.push_back(tape.leaf(in[0], true));
            leaves.push_back(tape.leaf(in[1], true));
            Value s = add(tape, leaves[0], leaves[1]);
            Value m = mul(tape, s, leaves[1]);
            return reduce_sum(tape, relu(tape, m));
        };
        Tape tape;
        std::vector<Value> leaves;
        Value loss = run({a, b}, tape, leaves);
        tape.backward(loss);
        std::vector<Tensor> analytic{tape.grad(leaves[0]), tape.grad(leaves[1])};
        auto f = [&run](const std::vector<Tensor>& in) {
            Tape t;
            std::vector<Value> l;
            return t.value(run(in, t, l)).scalar_value();
        };
        CHECK(swtest::fd_max_rel_error(f, {a, b}, analytic) < 1e-5);
    }

    SUBCASE("dense + softmax xent") {
        Tensor x = random_tensor(Shape{3, 4}, 31);
        Tensor w = random_tensor(Shape{5, 4}, 32, -0.5, 0.5);
        Tensor bias = random_tensor(Shape{5}, 33, -0.1, 0.1);
        const std::vector<std::int64_t> labels{1, 0, 4};
        auto build = [&labels](const std::vector<Tensor>& in, Tape& tape, std::vector<Value>& leaves) {
            for (const auto& t : in) leaves.push_back(tape.leaf(t, true));
            Value logits = dense(tape, leaves[0], leaves[1], leaves[2]);
            return softmax_cross_entropy(tape, logits, labels);
        };
        Tape tape;
        std::vector<Value> leaves;
        Value loss = build({x, w, bias}, tape, leaves);
        tape.backward(loss);
        std::vector<Tensor> analytic{tape.grad(leaves[0]), tape.grad(leaves[1]), tape.grad(leaves[2])};
        auto f = [&build](const std::vector<Tensor>& in) {
            Tape t;
            std::vector<Value> l;
            return t.value(build(in, t, l)).scalar_value();
        };
        CHECK(swtest::fd_max_rel_error(f, {x, w, bias}, analytic) < 1e-5);
    }

    SUBCASE("sigmoid bce") {
        Tensor z = random_tensor(Shape{2, 4}, 41, -2.0, 2.0);
        Tensor targets(Shape{2, 4}, std::vector<double>{1, 0, 1, 1, 0, 0, 1, 0});
        auto build = [&targets](const std::vector<Tensor>& in, Tape& tape, std::vector<Value>& leaves) {
            leaves.push_back(tape.leaf(in[0], true));
            return sigmoid_binary_cross_entropy(tape, leaves[0], targets);
        };
        Tape tape;
        std::vector<Value> leaves;
        Value loss = build({z}, tape, leaves);
        tape.backward(loss);
        std::vector<Tensor> analytic{tape.grad(leaves[0])};
        auto f = [&build](const std::vector<Tensor>& in) {
            Tape t;
            std::vector<Value> l;
            return t.value(build(in, t, l)).scalar_value();
        };
        CHECK(swtest::fd_max_rel_error(f, {z}, analytic) < 1e-5);
    }
}

TEST_CASE("gradient check: conv1d against finite differences") {
    for (auto padding : {Padding::zero, Padding::circular}) {
        for (std::int64_t stride : {1, 2}) {
            if (padding == Padding::circular && stride != 1) continue;
            Tensor x = random_tensor(Shape{2, 2, 8}, 51);
            Tensor k = random_tensor(Shape{2, 2, 3}, 52, -0.7, 0.7);
            Conv1dSpec spec;
            spec.padding = padding;
            spec.stride = stride;
            spec.pad = padding == Padding::zero ? 1 : 0;
            auto build = [&spec](const std::vector<Tensor>& in, Tape& tape, std::vector<Value>& leaves) {
                leaves.push_back(tape.leaf(in[0], true));
                leaves.push_back(tape.leaf(in[1], true));
                Value y = conv1d(tape, leaves[0], leaves[1], spec);
                Value r = relu(tape, y);
                return reduce_sum(tape, mul(tape, r, r));
            };
            Tape tape;
            std::vector<Value> leaves;
            Value loss = build({x, k}, tape, leaves);
            tape.backward(loss);
            std::vector<Tensor> analytic{tape.grad(leaves[0]), tape.grad(leaves[1])};
            auto f = [&build](const std::vector<Tensor>& in) {
                Tape t;
                std::vector<Value> l;
                return t.value(build(in, t, l)).scalar_value();
            };
            CHECK(swtest::fd_max_rel_error(f, {x, k}, analytic) < 1e-5);
        }
    }
}

TEST_CASE("gradient check: maxpool, projection, mean_over_last, batchnorm") {
    SUBCASE("maxpool + mean_over_last") {
        Tensor x = random_tensor(Shape{2, 2, 9}, 61);
        auto build = [](const std::vector<Tensor>& in, Tape& tape, std::vector<Value>& leaves) {
            leaves.push_back(tape.leaf(in[0], true));
            Value p = maxpool1d(tape, leaves[0], 3, 2);
            return reduce_sum(tape, mean_over_last(tape, p));
        };
        Tape tape;
        std::vector<Value> leaves;
        Value loss = build({x}, tape, leaves);
        tape.backward(loss);
        std::vector<Tensor> analytic{tape.grad(leaves[0])};
        auto f = [&build](const std::vector<Tensor>& in) {
            Tape t;
            std::vector<Value> l;
            return t.value(build(in, t, l)).scalar_value();
        };
        CHECK(swtest::fd_max_rel_error(f, {x}, analytic) < 1e-5);
    }

    SUBCASE("project max and mean") {
        for (auto kind : {PoolKind::max, PoolKind::mean}) {
            Tensor x = random_tensor(Shape{1, 2, 3, 5}, 71);
            auto build = [kind](const std::vector<Tensor>& in, Tape& tape, std::vector<Value>& leaves) {
                leaves.push_back(tape.leaf(in[0], true));
                Value p = project_scales(tape, leaves[0], kind);
                return reduce_sum(tape, mul(tape, p, p));
            };
            Tape tape;
            std::vector<Value> leaves;
            Value loss = build({x}, tape, leaves);
            tape.backward(loss);
            std::vector<Tensor> analytic{tape.grad(leaves[0])};
            auto f = [&build](const std::vector<Tensor>& in) {
                Tape t;
                std::vector<Value> l;
                return t.value(build(in, t, l)).scalar_value();
            };
            CHECK(swtest::fd_max_rel_error(f, {x}, analytic) < 1e-5);
        }
    }

    SUBCASE("batchnorm train mode") {
        Tensor x = random_tensor(Shape{3, 2, 4}, 81);
        Tensor gamma = random_tensor(Shape{2}, 82, 0.5, 1.5);
        Tensor beta = random_tensor(Shape{2}, 83, -0.5, 0.5);
        auto build = [](const std::vector<Tensor>& in, Tape& tape, std::vector<Value>& leaves) {
            for (const auto& t : in) leaves.push_back(tape.leaf(t, true));
            BatchNormState state(2);
            Value y = batchnorm1d(tape, leaves[0], leaves[1], leaves[2], state, true);
            return reduce_sum(tape, mul(tape, y, y));
        };
        Tape tape;
        std::vector<Value> leaves;
        Value loss = build({x, gamma, beta}, tape, leaves);
        tape.backward(loss);
        std::vector<Tensor> analytic{tape.grad(leaves[0]), tape.grad(leaves[1]), tape.grad(leaves[2])};
        auto f = [&build](const std::vector<Tensor>& in) {
            Tape t;
            std::vector<Value> l;
            return t.value(build(in, t, l)).scalar_value();
        };
        CHECK(swtest::fd_max_rel_error(f, {x, gamma, beta}, analytic) < 1e-5);
    }
}

TEST_CASE("backward determinism: identical graphs give bitwise-identical gradients") {
    auto run = []() {
        Tensor x = random_tensor(Shape{2, 2, 12}, 91);
        Tensor k = random_tensor(Shape{2, 2, 3}, 92);
        Tape tape;
        Value xv = tape.leaf(x, true);
        Value kv = tape.leaf(k, true);
        Conv1dSpec spec;
        spec.pad = 1;
        Value y = conv1d(tape, xv, kv, spec);
        Value loss = reduce_sum(tape, mul(tape, y, y));
        tape.backward(loss);
        return std::make_pair(tape.grad(xv), tape.grad(kv));
    };
    auto [gx1, gk1] = run();
    auto [gx2, gk2] = run();
    CHECK(max_abs_diff(gx1, gx2) == 0.0);
    CHECK(max_abs_diff(gk1, gk2) == 0.0);
}

TEST_CASE("f32 precision mode rounds op outputs through float") {
    set_default_precision(Precision::f32);
    Tape tape;
    Value x = tape.leaf(Tensor(Shape{1}, std::vector<double>{1.0}), false);
    Value y = scale(tape, x, 1.0 / 3.0);
    const double v = tape.value(y)[0];
    set_default_precision(Precision::f64);
    CHECK(v == static_cast<double>(static_cast<float>(1.0 / 3.0)));
}
