#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "frontal/ops.hpp"
#include "frontal/tensor.hpp"
#include "helpers.hpp"

using namespace frontal;

TEST_CASE("tensor shape and data lengths agree") {
    const Tensor t = Tensor::from_values({2, 3}, {1, 2, 3, 4, 5, 6});
    REQUIRE(t.numel() == 6);
    REQUIRE_THROWS_AS(Tensor::from_values({2, 3}, {1, 2, 3}), ShapeError);
    REQUIRE_THROWS_AS(Tensor::zeros({2, -1}), ShapeError);
    REQUIRE_THROWS_AS(Tensor::zeros({}), ShapeError);
}

TEST_CASE("clone copies values but not sharing") {
    Tensor t = Tensor::from_values({2}, {1.0, 2.0});
    Tensor c = t.clone();
    c.values_mut()[0] = 9.0;
    REQUIRE(t.values()[0] == 1.0);
    Tensor alias = t;
    alias.values_mut()[0] = 5.0;
    REQUIRE(t.values()[0] == 5.0);
}

TEST_CASE("elementwise ops require matching shapes") {
    const Tensor a = Tensor::zeros({2, 2});
    const Tensor b = Tensor::zeros({4});
    REQUIRE_THROWS_AS(add(a, b), ShapeError);
    REQUIRE_THROWS_AS(sub(a, b), ShapeError);
    REQUIRE_THROWS_AS(mul(a, b), ShapeError);
    REQUIRE_THROWS_AS(l1_mean(a, b), ShapeError);
}

TEST_CASE("l1_mean basics") {
    const Tensor a = Tensor::from_values({2}, {0.0, 1.0});
    const Tensor b = Tensor::from_values({2}, {1.0, 1.0});
    REQUIRE(l1_mean(a, b).item() == 0.5); // (|0-1| + 0) / 2
    REQUIRE(l1_mean(a, a).item() == 0.0);
    REQUIRE(l1_mean(a, b).item() == l1_mean(b, a).item());
}

TEST_CASE("l1_mean symmetry holds on random pairs") {
    for (int i = 0; i < 20; ++i) {
        const Tensor a = seeded_uniform({3, 5}, -2.0, 2.0, 100 + i);
        const Tensor b = seeded_uniform({3, 5}, -2.0, 2.0, 200 + i);
        REQUIRE(l1_mean(a, b).item() == l1_mean(b, a).item());
    }
}

TEST_CASE("linear identity map and shape checks") {
    const Tensor x = Tensor::from_values({1, 2}, {1.0, 2.0});
    const Tensor w = Tensor::from_values({2, 2}, {1.0, 0.0, 0.0, 1.0});
    const Tensor b = Tensor::zeros({2});
    const Tensor y = linear(x, w, b);
    REQUIRE(y.values()[0] == 1.0);
    REQUIRE(y.values()[1] == 2.0);

    const Tensor w_bad = Tensor::zeros({3, 2});
    REQUIRE_THROWS_AS(linear(x, w_bad, b), ShapeError);
    const Tensor b_bad = Tensor::zeros({3});
    REQUIRE_THROWS_AS(linear(x, w, b_bad), ShapeError);
}

TEST_CASE("activation fixed points and asymptote") {
    const Tensor zero = Tensor::zeros({1});
    REQUIRE(elu(zero).item() == 0.0);
    REQUIRE(tanh(zero).item() == 0.0);
    const Tensor deep = Tensor::from_values({1}, {-1e9});
    const double v = elu(deep).item();
    REQUIRE(v >= -1.0);
    REQUIRE(v == Catch::Approx(-1.0).margin(1e-12));
}

TEST_CASE("backward of x squared and tanh") {
    Tensor x = Tensor::from_values({1}, {3.0});
    x.mark_parameter();
    Tape tape;
    Tensor y = mul(x, x, &tape);
    tape.backward(y);
    REQUIRE(x.grad()[0] == Catch::Approx(6.0));

    Tensor t0 = Tensor::zeros({1});
    t0.mark_parameter();
    Tape tape2;
    Tensor y2 = tanh(t0, &tape2);
    tape2.backward(y2);
    REQUIRE(t0.grad()[0] == Catch::Approx(1.0));
}

TEST_CASE("backward rejects non-scalar and foreign losses") {
    Tensor x = Tensor::zeros({2, 2});
    Tape tape;
    Tensor y = elu(x, &tape);
    REQUIRE_THROWS_AS(tape.backward(y), ContractError);

    Tape other;
    Tensor scalar = l1_mean(Tensor::zeros({2}), Tensor::zeros({2}), &other);
    REQUIRE_THROWS_AS(tape.backward(scalar), ContractError); // produced elsewhere
    Tensor leaf = Tensor::zeros({1});
    REQUIRE_THROWS_AS(other.backward(leaf), ContractError); // a leaf, not an op output
}

TEST_CASE("tape clears after backward and skips dead branches") {
    Tensor x = Tensor::from_values({2}, {1.0, -1.0});
    x.mark_parameter();
    Tape tape;
    Tensor used = scale(x, 2.0, &tape);
    Tensor dead = scale(x, 5.0, &tape); // never feeds the loss
    (void)dead;
    Tensor loss = l1_mean(used, Tensor::zeros({2}), &tape);
    REQUIRE(tape.size() == 3);
    tape.backward(loss);
    REQUIRE(tape.empty());
    // d/dx mean(|2x|) = sign(x) * 2 / 2
    REQUIRE(x.grad()[0] == Catch::Approx(1.0));
    REQUIRE(x.grad()[1] == Catch::Approx(-1.0));
}

TEST_CASE("fan-out accumulates gradients") {
    Tensor x = Tensor::from_values({1}, {4.0});
    x.mark_parameter();
    Tape tape;
    Tensor y = add(x, x, &tape);
    tape.backward(y);
    REQUIRE(x.grad()[0] == Catch::Approx(2.0));
}

TEST_CASE("forward and backward are deterministic across runs") {
    const auto run = [] {
        Tensor x = seeded_uniform({2, 3}, -1.0, 1.0, 55);
        x.mark_parameter();
        Tape tape;
        Tensor y = l1_mean(tanh(elu(x, &tape), &tape), seeded_uniform({2, 3}, -1.0, 1.0, 56),
                           &tape);
        const double loss = y.item();
        tape.backward(y);
        std::vector<double> g(x.grad().begin(), x.grad().end());
        return std::make_pair(loss, g);
    };
    const auto [l1, g1] = run();
    const auto [l2, g2] = run();
    REQUIRE(l1 == l2);
    REQUIRE(g1 == g2);
}

TEST_CASE("finite forward results for finite inputs") {
    const Tensor x = seeded_uniform({2, 2, 4, 4}, -10.0, 10.0, 1);
    const Tensor k = seeded_uniform({2, 2, 3, 3}, -10.0, 10.0, 2);
    for (double v : elu(x).values()) REQUIRE(std::isfinite(v));
    for (double v : tanh(x).values()) REQUIRE(std::isfinite(v));
    for (double v : conv2d(x, k, 1, 1).values()) REQUIRE(std::isfinite(v));
}
