#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "tensor.hpp"
#include "testutil.hpp"

using namespace dna;
using namespace dnatest;

TEST_CASE("conv2d 1x1 kernel scales the input") {
    Tape tape;
    auto x = Tensor::from_values({1, 3, 3}, std::vector<double>(9, 1.0));
    auto w = Tensor::from_values({1, 1, 1, 1}, {2.0});
    auto b = Tensor::from_values({1}, {0.0});
    auto y = tape.conv2d(x, w, b, 1, 0);
    CHECK(y->shape() == std::vector<int>{1, 3, 3});
    for (double v : y->values())
        CHECK(v == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("conv2d full-size kernel sums the entries") {
    Tape tape;
    auto x = Tensor::from_values({1, 2, 2}, {1, 2, 3, 4});
    auto w = Tensor::from_values({1, 1, 2, 2}, {1, 1, 1, 1});
    auto b = Tensor::from_values({1}, {0.0});
    auto y = tape.conv2d(x, w, b, 1, 0);
    CHECK(y->shape() == std::vector<int>{1, 1, 1});
    CHECK(y->values()[0] == doctest::Approx(10.0).epsilon(1e-15));
}

TEST_CASE("conv2d matches the direct-loop oracle") {
    Tape tape;
    auto x = random_tensor({2, 5, 5}, 42);
    auto w = random_tensor({3, 2, 3, 3}, 43);
    auto b = random_tensor({3}, 44);
    auto y = tape.conv2d(x, w, b, 1, 1);
    auto ref = conv2d_oracle(x->values(), 2, 5, 5, w->values(), 3, 3,
                             b->values(), 1, 1);
    REQUIRE(y->size() == ref.size());
    for (std::size_t i = 0; i < ref.size(); ++i)
        CHECK(std::abs(y->values()[i] - ref[i]) < 1e-12);
}

TEST_CASE("conv2d oracle agreement across shapes and strides") {
    struct Case {
        int cin, h, w, cout, k, stride, pad;
    };
    const Case cases[] = {
        {1, 1, 1, 1, 1, 1, 0}, {1, 4, 6, 2, 3, 1, 1}, {3, 8, 8, 2, 3, 2, 1},
        {2, 7, 5, 4, 5, 2, 2}, {1, 6, 6, 1, 3, 3, 0}, {4, 9, 9, 3, 1, 2, 0},
        {2, 5, 9, 2, 3, 1, 2}, {1, 8, 8, 5, 7, 1, 3},
    };
    std::uint64_t seed = 100;
    for (const Case& c : cases) {
        Tape tape;
        auto x = random_tensor({c.cin, c.h, c.w}, seed++);
        auto w = random_tensor({c.cout, c.cin, c.k, c.k}, seed++);
        auto b = random_tensor({c.cout}, seed++);
        auto y = tape.conv2d(x, w, b, c.stride, c.pad);
        auto ref = conv2d_oracle(x->values(), c.cin, c.h, c.w, w->values(),
                                 c.cout, c.k, b->values(), c.stride, c.pad);
        REQUIRE(y->size() == ref.size());
        for (std::size_t i = 0; i < ref.size(); ++i)
            CHECK(std::abs(y->values()[i] - ref[i]) < 1e-12);
    }
}

TEST_CASE("conv2d rejects bad shapes and degenerate outputs") {
    Tape tape;
    auto x = random_tensor({2, 4, 4}, 1);
    auto w = random_tensor({1, 3, 3, 3}, 2); // expects 3 input channels
    auto b = random_tensor({1}, 3);
    CHECK_THROWS_AS(tape.conv2d(x, w, b, 1, 1), DimensionError);

    auto w2 = random_tensor({2, 2, 3, 3}, 4);
    auto b_bad = random_tensor({3}, 5);
    CHECK_THROWS_AS(tape.conv2d(x, w2, b_bad, 1, 1), DimensionError);

    auto w_big = random_tensor({1, 2, 5, 5}, 6);
    auto b1 = random_tensor({1}, 7);
    CHECK_THROWS_AS(tape.conv2d(x, w_big, b1, 1, 0), ConfigError);
    auto b2 = random_tensor({2}, 8);
    CHECK_THROWS_AS(tape.conv2d(x, w2, b2, 0, 0), ConfigError);
}

TEST_CASE("upsample_nearest2x replicates pixels") {
    Tape tape;
    auto x = Tensor::from_values({1, 1, 1}, {5.0});
    auto y = tape.upsample_nearest2x(x);
    CHECK(y->shape() == std::vector<int>{1, 2, 2});
    for (double v : y->values())
        CHECK(v == 5.0);

    auto x2 = Tensor::from_values({1, 2, 1}, {1.0, 2.0});
    auto y2 = tape.upsample_nearest2x(x2);
    CHECK(y2->shape() == std::vector<int>{1, 4, 2});
    CHECK(y2->values() == std::vector<double>{1, 1, 1, 1, 2, 2, 2, 2});
}

TEST_CASE("upsample backward sums each block") {
    Tape tape;
    auto x = Tensor::from_values({1, 1, 1}, {5.0}, true);
    auto y = tape.upsample_nearest2x(x);
    auto loss = tape.sum(y);
    tape.backward(loss);
    CHECK(x->grad()[0] == doctest::Approx(4.0).epsilon(1e-15));
}

TEST_CASE("leaky_relu values and subgradient convention") {
    Tape tape;
    auto x = Tensor::from_values({3}, {-1.0, 0.0, 2.0});
    auto y = tape.leaky_relu(x, 0.1);
    CHECK(y->values()[0] == doctest::Approx(-0.1).epsilon(1e-15));
    CHECK(y->values()[1] == 0.0);
    CHECK(y->values()[2] == 2.0);

    auto pos = Tensor::from_values({3}, {0.5, 1.0, 7.0});
    auto idy = tape.leaky_relu(pos, 0.3);
    CHECK(idy->values() == pos->values());

    // gradient at a negative point is the slope; at exactly 0 the declared
    // subgradient is also the slope
    auto p = Tensor::from_values({2}, {-3.0, 0.0}, true);
    auto out = tape.leaky_relu(p, 0.2);
    tape.backward(tape.sum(out));
    CHECK(p->grad()[0] == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(p->grad()[1] == doctest::Approx(0.2).epsilon(1e-15));

    CHECK_THROWS_AS(tape.leaky_relu(x, 1.5), ConfigError);
}

TEST_CASE("sigmoid values, asymptote and gradient at zero") {
    Tape tape;
    auto x = Tensor::from_values({1}, {0.0}, true);
    auto y = tape.sigmoid(x);
    CHECK(y->values()[0] == doctest::Approx(0.5).epsilon(1e-15));
    tape.backward(tape.sum(y));
    CHECK(x->grad()[0] == doctest::Approx(0.25).epsilon(1e-12));

    Tape tape2;
    auto big = Tensor::from_values({3}, {25.0, 40.0, 700.0});
    auto s = tape2.sigmoid(big);
    for (double v : s->values())
        CHECK(std::abs(v - 1.0) < 1e-9);
    auto neg = Tensor::from_values({2}, {-25.0, -700.0});
    auto sn = tape2.sigmoid(neg);
    CHECK(sn->values()[0] < 1e-9);
    CHECK(sn->values()[1] >= 0.0);
}

TEST_CASE("backward of linear and quadratic forms") {
    Tape tape;
    auto w = random_tensor({6}, 7, true);
    auto c = random_tensor({6}, 8);
    auto loss = tape.sum(tape.mul(w, c));
    tape.backward(loss);
    for (std::size_t i = 0; i < 6; ++i)
        CHECK(w->grad()[i] == doctest::Approx(c->values()[i]).epsilon(1e-15));

    Tape tape2;
    auto w2 = random_tensor({5}, 9, true);
    auto loss2 = tape2.sum(tape2.mul(w2, w2));
    tape2.backward(loss2);
    for (std::size_t i = 0; i < 5; ++i)
        CHECK(w2->grad()[i] ==
              doctest::Approx(2.0 * w2->values()[i]).epsilon(1e-14));
}

TEST_CASE("backward contract errors") {
    Tape tape;
    auto x = random_tensor({4}, 11, true);
    auto y = tape.scale(x, 2.0);
    CHECK_THROWS_AS(tape.backward(y), ContractError); // non-scalar

    auto loss = tape.sum(y);
    tape.backward(loss);
    CHECK_THROWS_AS(tape.backward(loss), ContractError); // second backward

    Tape fresh;
    auto alien = Tensor::scalar(1.0, true);
    CHECK_THROWS_AS(fresh.backward(alien), ContractError); // not from tape
}

TEST_CASE("non-finite forward values raise NumericError naming the op") {
    Tape tape;
    auto x = Tensor::from_values({2}, {1e308, 1e308});
    CHECK_THROWS_AS(tape.add(x, x), NumericError);
    try {
        tape.add(x, x);
    } catch (const NumericError& e) {
        CHECK(std::string(e.what()).find("add") != std::string::npos);
    }
}

TEST_CASE("finite_diff_grad basics") {
    auto sum_f = [](const std::vector<double>& v) {
        double s = 0;
        for (double x : v)
            s += x;
        return s;
    };
    auto g = finite_diff_grad(sum_f, random_values(8, 21), 1e-4);
    for (double v : g)
        CHECK(std::abs(v - 1.0) < 1e-10);

    auto norm_sq = [](const std::vector<double>& v) {
        double s = 0;
        for (double x : v)
            s += x * x;
        return s;
    };
    auto g2 = finite_diff_grad(norm_sq, {3.0}, 1e-4);
    CHECK(std::abs(g2[0] - 6.0) < 1e-6);

    CHECK_THROWS_AS(finite_diff_grad(sum_f, {1.0}, 0.0), ConfigError);
}

namespace {

// Runs a finite-difference check of `loss_of` (a tape recording whose inputs
// are `leaf`) against the tape gradient.
double fd_check(const TensorPtr& leaf,
                const std::function<TensorPtr(Tape&, const TensorPtr&)>& body) {
    leaf->zero_grad();
    Tape tape;
    auto loss = body(tape, leaf);
    tape.backward(loss);
    std::vector<double> analytic = leaf->grad();

    auto f = [&](const std::vector<double>& v) {
        auto probe = Tensor::from_values(leaf->shape(),
                                         std::vector<double>(v), false);
        Tape t;
        return body(t, probe)->item();
    };
    std::vector<double> numeric = finite_diff_grad(f, leaf->values(), 1e-4);
    return max_rel_err(analytic, numeric, 1e-5);
}

} // namespace

TEST_CASE("every op passes randomized finite-difference checks") {
    // >= 100 cases across all differentiable ops
    int cases = 0;
    for (std::uint64_t rep = 0; rep < 12; ++rep) {
        const std::uint64_t s = 1000 + rep * 17;

        auto x = random_tensor({2, 4, 4}, s, true);
        CHECK(fd_check(x, [&](Tape& t, const TensorPtr& v) {
                  auto w = random_tensor({2, 2, 3, 3}, s + 1);
                  auto b = random_tensor({2}, s + 2);
                  return t.sum(t.conv2d(v, w, b, 1, 1));
              }) < 1e-3);
        ++cases;

        auto w = random_tensor({2, 2, 3, 3}, s + 3, true);
        CHECK(fd_check(w, [&](Tape& t, const TensorPtr& v) {
                  auto in = random_tensor({2, 4, 4}, s + 4);
                  auto b = random_tensor({2}, s + 5);
                  return t.sum(t.sigmoid(t.conv2d(in, v, b, 2, 1)));
              }) < 1e-3);
        ++cases;

        auto b = random_tensor({3}, s + 6, true);
        CHECK(fd_check(b, [&](Tape& t, const TensorPtr& v) {
                  auto in = random_tensor({1, 5, 5}, s + 7);
                  auto wt = random_tensor({3, 1, 3, 3}, s + 8);
                  return t.sum(t.conv2d(in, wt, v, 1, 0));
              }) < 1e-3);
        ++cases;

        auto u = random_tensor({2, 3, 3}, s + 9, true);
        CHECK(fd_check(u, [](Tape& t, const TensorPtr& v) {
                  return t.sum(t.upsample_nearest2x(v));
              }) < 1e-3);
        CHECK(fd_check(u, [](Tape& t, const TensorPtr& v) {
                  return t.sum(t.leaky_relu(v, 0.17));
              }) < 1e-3);
        CHECK(fd_check(u, [](Tape& t, const TensorPtr& v) {
                  return t.sum(t.sigmoid(v));
              }) < 1e-3);
        cases += 3;

        auto a = random_tensor({7}, s + 10, true);
        CHECK(fd_check(a, [&](Tape& t, const TensorPtr& v) {
                  auto other = random_tensor({7}, s + 11, false, 0.5, 1.5);
                  return t.sum(t.mul(t.add(v, other), t.sub(v, other)));
              }) < 1e-3);
        CHECK(fd_check(a, [&](Tape& t, const TensorPtr& v) {
                  auto other = random_tensor({7}, s + 12, false, 0.5, 1.5);
                  return t.sum(t.div(v, other));
              }) < 1e-3);
        CHECK(fd_check(a, [](Tape& t, const TensorPtr& v) {
                  return t.scale(t.add_scalar(t.sum(v), 0.7), -1.3);
              }) < 1e-3);
        cases += 3;

        auto c1 = random_tensor({2, 3, 4}, s + 13, true);
        CHECK(fd_check(c1, [&](Tape& t, const TensorPtr& v) {
                  auto c2 = random_tensor({1, 3, 4}, s + 14);
                  return t.sum(t.sigmoid(t.concat_channels(v, c2)));
              }) < 1e-3);
        ++cases;
    }
    CHECK(cases >= 100);
}

TEST_CASE("backward is linear in the loss") {
    auto w = random_tensor({6}, 55, true);
    auto c = random_tensor({6}, 56);
    const double a = 2.5, b = -1.25;

    auto make_f = [&](Tape& t) { return t.sum(t.mul(w, c)); };
    auto make_g = [&](Tape& t) { return t.sum(t.mul(w, w)); };

    Tape tf;
    tf.backward(make_f(tf));
    std::vector<double> gf = w->grad();
    w->zero_grad();

    Tape tg;
    tg.backward(make_g(tg));
    std::vector<double> gg = w->grad();
    w->zero_grad();

    Tape tc;
    auto combined = tc.add(tc.scale(make_f(tc), a), tc.scale(make_g(tc), b));
    tc.backward(combined);
    for (std::size_t i = 0; i < 6; ++i)
        CHECK(std::abs(w->grad()[i] - (a * gf[i] + b * gg[i])) < 1e-10);
}

TEST_CASE("ops never mutate their inputs") {
    auto x = random_tensor({2, 4, 4}, 77, true);
    auto w = random_tensor({1, 2, 3, 3}, 78, true);
    auto b = random_tensor({1}, 79, true);
    const auto xv = x->values();
    const auto wv = w->values();
    const auto bv = b->values();

    Tape tape;
    auto y = tape.conv2d(x, w, b, 1, 1);
    auto z = tape.sigmoid(tape.leaky_relu(tape.upsample_nearest2x(y), 0.1));
    tape.backward(tape.sum(z));

    CHECK(x->values() == xv);
    CHECK(w->values() == wv);
    CHECK(b->values() == bv);
}

TEST_CASE("tensor invariants and accessors") {
    CHECK_THROWS_AS(Tensor::create({0, 3}), ConfigError);
    CHECK_THROWS_AS(Tensor::from_values({2, 2}, {1.0}), DimensionError);
    auto t = Tensor::from_values({2, 2}, {1, 2, 3, 4});
    CHECK(t->size() == 4);
    CHECK_THROWS_AS(t->item(), ContractError);
    CHECK(Tensor::scalar(3.5)->item() == 3.5);
}
