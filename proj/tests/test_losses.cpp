#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "losses.hpp"
#include "testutil.hpp"

using namespace dna;
using namespace dnatest;

namespace {

double image_sq_norm(const Image& x) {
    double s = 0.0;
    for (double v : x.data)
        s += v * v;
    return s;
}

double sq_dist(const Image& a, const Image& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a.data[i] - b.data[i];
        s += d * d;
    }
    return s;
}

// finite differences of a plain image functional
std::vector<double> fd_image_grad(const std::function<double(const Image&)>& f,
                                  const Image& x, double h = 1e-4) {
    Image probe = x;
    auto wrapped = [&](const std::vector<double>& v) {
        probe.data = v;
        return f(probe);
    };
    return finite_diff_grad(wrapped, x.data, h);
}

} // namespace

TEST_CASE("finite differences with Neumann boundary") {
    Image c(2, 3, 4, 0.7);
    auto f = finite_differences(c);
    for (double v : f.dx)
        CHECK(v == 0.0);
    for (double v : f.dy)
        CHECK(v == 0.0);

    Image two(1, 1, 2);
    two.at(0, 0, 0) = 0.0;
    two.at(0, 0, 1) = 1.0;
    auto g = finite_differences(two);
    CHECK(g.dx == std::vector<double>{1.0, 0.0});
    CHECK(g.dy == std::vector<double>{0.0, 0.0});

    Image ramp(1, 4, 4);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            ramp.at(0, i, j) = j;
    auto r = finite_differences(ramp);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
            CHECK(r.dx[i * 4 + j] == (j < 3 ? 1.0 : 0.0));
            CHECK(r.dy[i * 4 + j] == 0.0);
        }

    // far-boundary rows/columns are exactly zero on random images too
    auto x = random_image(1, 5, 6, 17);
    auto fx = finite_differences(x);
    for (int i = 0; i < 5; ++i)
        CHECK(fx.dx[i * 6 + 5] == 0.0);
    for (int j = 0; j < 6; ++j)
        CHECK(fx.dy[4 * 6 + j] == 0.0);
}

TEST_CASE("smoothed TV of a constant image is gamma*C*H*W") {
    // gamma = 0.5 makes every term exact in binary floating point
    Image c(3, 4, 5, 0.3);
    CHECK(smoothed_tv_value(c, 0.5) == 0.5 * 3 * 4 * 5);
    CHECK(rel_err(smoothed_tv_value(c, 1e-8), 1e-8 * 3 * 4 * 5) < 1e-12);
}

TEST_CASE("smoothed TV counts unit steps in the gamma->0 limit") {
    Image x(1, 2, 2);
    x.at(0, 0, 0) = 0.0;
    x.at(0, 0, 1) = 1.0;
    x.at(0, 1, 0) = 0.0;
    x.at(0, 1, 1) = 1.0;
    CHECK(std::abs(smoothed_tv_value(x, 1e-12) - 2.0) < 1e-6);
}

TEST_CASE("smoothed TV is minimised exactly by constants") {
    const double gamma = 0.01;
    for (std::uint64_t s = 0; s < 40; ++s) {
        auto x = random_image(1, 5, 5, 400 + s);
        CHECK(smoothed_tv_value(x, gamma) > gamma * 25);
    }
    Image c(1, 5, 5, 0.42);
    CHECK(smoothed_tv_value(c, gamma) == doctest::Approx(gamma * 25));
}

TEST_CASE("smoothed TV analytic gradient matches finite differences") {
    const double gamma = 0.01;
    auto x = random_image(1, 6, 6, 21);
    auto analytic = smoothed_tv_grad(x, gamma);
    auto numeric = fd_image_grad(
        [gamma](const Image& img) { return smoothed_tv_value(img, gamma); }, x);
    CHECK(max_rel_err(analytic, numeric, 1e-5) < 1e-4);

    // tape op agrees with the plain function and with finite differences
    Tape tape;
    auto t = Tensor::from_values({1, 6, 6}, x.data, true);
    auto tv = smoothed_tv(tape, t, gamma);
    CHECK(tv->item() == smoothed_tv_value(x, gamma));
    tape.backward(tv);
    CHECK(max_rel_err(t->grad(), numeric, 1e-5) < 1e-4);
}

TEST_CASE("TV shift invariance; normalised TV is not shift invariant") {
    auto x = random_image(2, 6, 5, 31);
    Image shifted = x;
    for (double& v : shifted.data)
        v += 0.25;
    const double gamma = 0.02;
    CHECK(smoothed_tv_value(x, gamma) ==
          doctest::Approx(smoothed_tv_value(shifted, gamma)).epsilon(1e-12));
    CHECK(std::abs(normalized_tv_value(x, gamma) -
                   normalized_tv_value(shifted, gamma)) > 1e-6);
}

TEST_CASE("normalised TV closed forms") {
    // zero image: TV = gamma*C*H*W, denominator = gamma
    Image z(2, 3, 3);
    CHECK(rel_err(normalized_tv_value(z, 1e-8), 2.0 * 9) < 1e-9);

    // constant image value c
    const double c = 0.6, gamma = 1e-6;
    Image k(1, 4, 4, c);
    const double expect = gamma * 16 / (c * c * 16 + gamma);
    CHECK(rel_err(normalized_tv_value(k, gamma), expect) < 1e-12);
}

TEST_CASE("normalised TV gradient matches finite differences") {
    const double gamma = 0.01;
    auto x = random_image(1, 8, 8, 57, 0.1, 0.9);
    Tape tape;
    auto t = Tensor::from_values({1, 8, 8}, x.data, true);
    auto loss = normalized_tv_loss(tape, t, gamma);
    CHECK(loss->item() == doctest::Approx(normalized_tv_value(x, gamma))
                              .epsilon(1e-12));
    tape.backward(loss);
    auto numeric = fd_image_grad(
        [gamma](const Image& img) { return normalized_tv_value(img, gamma); },
        x);
    CHECK(max_rel_err(t->grad(), numeric, 1e-5) < 1e-4);
}

TEST_CASE("spectral fidelity closed forms") {
    auto y = random_image(1, 8, 8, 61);
    CHECK(spectral_fidelity_value(y, y, 1e-8) == 0.0);

    // zero reference: L_IS = ||F(x)||^2/gamma = H*W*||x||^2/gamma
    auto x = random_image(1, 8, 8, 62);
    Image zero(1, 8, 8);
    const double gamma = 0.37;
    CHECK(rel_err(spectral_fidelity_value(x, zero, gamma),
                  64.0 * image_sq_norm(x) / gamma) < 1e-9);

    // with negligible gamma the loss is the relative pixel energy
    const double lhs = spectral_fidelity_value(x, y, 1e-8);
    CHECK(rel_err(lhs, sq_dist(x, y) / image_sq_norm(y)) < 1e-6);

    Image wrong(1, 4, 4);
    CHECK_THROWS_AS(spectral_fidelity_value(x, wrong, 1e-8), DimensionError);
}

TEST_CASE("spectral fidelity Parseval reformulation, no FFT involved") {
    for (std::uint64_t s = 0; s < 10; ++s) {
        auto x = random_image(2, 8, 8, 700 + s);
        auto y = random_image(2, 8, 8, 800 + s);
        const double gamma = 1e-4;
        const double lhs = spectral_fidelity_value(x, y, gamma);
        const double rhs =
            64.0 * sq_dist(x, y) / (64.0 * image_sq_norm(y) + gamma);
        CHECK(rel_err(lhs, rhs) < 1e-9);
    }
}

TEST_CASE("spectral fidelity tape gradient matches finite differences") {
    auto y = random_image(1, 6, 6, 91);
    auto x = random_image(1, 6, 6, 92);
    const double gamma = 1e-8;
    Tape tape;
    auto t = Tensor::from_values({1, 6, 6}, x.data, true);
    auto loss = spectral_fidelity_loss(tape, t, y, gamma);
    CHECK(loss->item() == doctest::Approx(spectral_fidelity_value(x, y, gamma))
                              .epsilon(1e-12));
    tape.backward(loss);
    auto numeric = fd_image_grad(
        [&](const Image& img) {
            return spectral_fidelity_value(img, y, gamma);
        },
        x);
    CHECK(max_rel_err(t->grad(), numeric, 1e-5) < 1e-4);
}

TEST_CASE("total loss composition") {
    auto y = random_image(1, 8, 8, 93);
    ObjectiveConfig cfg;

    // beta = 0 and xhat = y gives exactly zero
    cfg.beta = 0.0;
    CHECK(total_loss_value(y, y, cfg) == 0.0);

    // alpha = 0 isolates the TV term
    cfg = ObjectiveConfig{};
    cfg.alpha = 0.0;
    auto x = random_image(1, 8, 8, 94);
    CHECK(total_loss_value(x, y, cfg) ==
          cfg.beta * normalized_tv_value(x, cfg.gamma_tv));

    // defaults: the two terms add up
    cfg = ObjectiveConfig{};
    const double total = total_loss_value(x, y, cfg);
    const double parts =
        cfg.alpha * spectral_fidelity_value(x, y, cfg.gamma_spec) +
        cfg.beta * normalized_tv_value(x, cfg.gamma_tv);
    CHECK(rel_err(total, parts) < 1e-12);
}

TEST_CASE("loss positivity invariants") {
    ObjectiveConfig cfg;
    for (std::uint64_t s = 0; s < 20; ++s) {
        auto x = random_image(1, 6, 6, 900 + s);
        auto y = random_image(1, 6, 6, 950 + s);
        CHECK(spectral_fidelity_value(x, y, cfg.gamma_spec) >= 0.0);
        CHECK(normalized_tv_value(x, cfg.gamma_tv) > 0.0);
        CHECK(total_loss_value(x, y, cfg) > 0.0);
    }
}

TEST_CASE("total loss tape nodes agree with plain evaluation") {
    auto y = random_image(2, 4, 4, 96);
    auto x = random_image(2, 4, 4, 97);
    ObjectiveConfig cfg;
    Tape tape;
    auto t = Tensor::from_values({2, 4, 4}, x.data, true);
    auto cache = make_spectral_cache(y, cfg.gamma_spec);
    LossNodes nodes = total_loss(tape, t, cache, cfg);
    CHECK(rel_err(nodes.total->item(), total_loss_value(x, y, cfg)) < 1e-12);
    tape.backward(nodes.total);
    auto numeric = fd_image_grad(
        [&](const Image& img) { return total_loss_value(img, y, cfg); }, x);
    CHECK(max_rel_err(t->grad(), numeric, 1e-5) < 1e-4);
}

TEST_CASE("objective config validation") {
    ObjectiveConfig cfg;
    cfg.gamma_spec = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = ObjectiveConfig{};
    cfg.gamma_tv = -1.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = ObjectiveConfig{};
    cfg.alpha = -0.5;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = ObjectiveConfig{};
    cfg.alpha = 0.0; // zero weights are allowed
    cfg.beta = 0.0;
    CHECK_NOTHROW(cfg.validate());
}
