#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "noise.hpp"
#include "optimizer.hpp"
#include "testutil.hpp"

using namespace dna;
using namespace dnatest;

TEST_CASE("adam leaves parameters alone under zero gradients") {
    auto w = random_tensor({5}, 1, true);
    const auto before = w->values();
    AdamState state({w});
    TrainConfig cfg;
    for (int t = 1; t <= 10; ++t) {
        w->grad(); // allocate zeros
        adam_step({w}, state, t, cfg);
    }
    CHECK(w->values() == before);
}

TEST_CASE("adam first step moves by lr times the gradient sign") {
    auto w = Tensor::from_values({1}, {0.0}, true);
    w->grad()[0] = 1.0;
    AdamState state({w});
    TrainConfig cfg;
    cfg.learning_rate = 0.1;
    adam_step({w}, state, 1, cfg);
    CHECK(std::abs(w->values()[0] - (-0.1)) < 1e-8);
}

TEST_CASE("adam reaches the minimiser of a 10-dimensional quadratic") {
    auto w = random_tensor({10}, 2, true, -1.0, 1.0);
    auto c = random_tensor({10}, 3, false, -1.0, 1.0);
    AdamState state({w});
    TrainConfig cfg;
    cfg.learning_rate = 0.05;
    for (int t = 1; t <= 500; ++t) {
        w->zero_grad();
        Tape tape;
        auto diff = tape.sub(w, c);
        tape.backward(tape.sum(tape.mul(diff, diff)));
        adam_step({w}, state, t, cfg);
    }
    double dist = 0.0;
    for (int i = 0; i < 10; ++i)
        dist += std::pow(w->values()[i] - c->values()[i], 2);
    CHECK(std::sqrt(dist) < 1e-3);
}

TEST_CASE("adam validates its contract") {
    auto w = random_tensor({3}, 4, true);
    AdamState state({w});
    TrainConfig cfg;
    CHECK_THROWS_AS(adam_step({w}, state, 0, cfg), ContractError);

    auto other = random_tensor({4}, 5, true);
    AdamState wrong({other});
    w->grad();
    CHECK_THROWS_AS(adam_step({w}, wrong, 1, cfg), ContractError);

    w->grad()[0] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(adam_step({w}, state, 1, cfg), NumericError);
}

TEST_CASE("train config validation") {
    TrainConfig cfg;
    cfg.iterations = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = TrainConfig{};
    cfg.adam_beta1 = 1.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = TrainConfig{};
    cfg.learning_rate = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

namespace {

Image noisy_phantom(PhantomKind kind, int size, double sigma, std::uint64_t seed) {
    Image clean = make_phantom(kind, size, size, 1);
    return add_gaussian_noise(clean, {sigma, seed});
}

TrainConfig quick_train(int iterations, std::uint64_t seed = 0) {
    TrainConfig cfg;
    cfg.iterations = iterations;
    cfg.log_every = 50;
    cfg.seed = seed;
    return cfg;
}

} // namespace

TEST_CASE("denoise trace contract for a single iteration") {
    Image y = noisy_phantom(PhantomKind::Circles, 16, 25.0, 9);
    NetworkConfig net;
    net.seed = 11;
    DenoiseResult res = denoise(y, ObjectiveConfig{}, net, quick_train(1));
    REQUIRE(res.loss_trace.size() == 2); // pre-step record plus final value
    CHECK(res.loss_trace[0].iteration == 0);
    CHECK(res.loss_trace[1].iteration == 1);
    CHECK(res.xhat.channels == 1);
    CHECK(res.xhat.height == 16);
    CHECK(res.xhat.width == 16);
    for (double v : res.xhat.data) {
        CHECK(v > 0.0);
        CHECK(v < 1.0);
    }
    // the loss moved, and every trace entry is finite
    for (const auto& row : res.loss_trace) {
        CHECK(std::isfinite(row.total));
        CHECK(std::isfinite(row.fidelity));
        CHECK(std::isfinite(row.regulariser));
    }
}

TEST_CASE("denoise is bit-deterministic") {
    Image y = noisy_phantom(PhantomKind::Step, 16, 25.0, 10);
    NetworkConfig net;
    net.seed = 77;
    DenoiseResult a = denoise(y, ObjectiveConfig{}, net, quick_train(25));
    DenoiseResult b = denoise(y, ObjectiveConfig{}, net, quick_train(25));
    CHECK(a.xhat.data == b.xhat.data);
    REQUIRE(a.loss_trace.size() == b.loss_trace.size());
    for (std::size_t i = 0; i < a.loss_trace.size(); ++i) {
        CHECK(a.loss_trace[i].total == b.loss_trace[i].total);
        CHECK(a.loss_trace[i].fidelity == b.loss_trace[i].fidelity);
        CHECK(a.loss_trace[i].regulariser == b.loss_trace[i].regulariser);
    }

    NetworkConfig other = net;
    other.seed = 78;
    DenoiseResult c = denoise(y, ObjectiveConfig{}, other, quick_train(25));
    CHECK(a.xhat.data != c.xhat.data);
}

TEST_CASE("dip baseline shares the loop contract") {
    Image y = noisy_phantom(PhantomKind::Circles, 16, 25.0, 12);
    NetworkConfig net;
    net.seed = 13;
    DenoiseResult a = denoise_dip_baseline(y, net, quick_train(1));
    REQUIRE(a.loss_trace.size() == 2);
    CHECK(a.loss_trace[0].regulariser == 0.0);
    DenoiseResult b = denoise_dip_baseline(y, net, quick_train(1));
    CHECK(a.xhat.data == b.xhat.data);
}

TEST_CASE("beta=0 spectral loss and DIP MSE descend the same direction") {
    // Parseval: with beta = 0 and negligible gamma, L_IS is the DIP MSE
    // times the constant H*W*C/||y||^2, so the normalised gradients at
    // theta_0 coincide.
    Image y = noisy_phantom(PhantomKind::Circles, 16, 25.0, 14);
    NetworkConfig net_cfg;
    net_cfg.seed = 15;

    Network net_a(net_cfg, y.channels, y.height, y.width);
    Tape ta;
    auto out_a = net_a.forward(ta);
    ta.backward(spectral_fidelity_loss(ta, out_a, y, 1e-30));
    std::vector<double> ga;
    for (const auto& p : net_a.parameters())
        ga.insert(ga.end(), p->grad().begin(), p->grad().end());

    Network net_b(net_cfg, y.channels, y.height, y.width);
    Tape tb;
    auto out_b = net_b.forward(tb);
    auto target = Tensor::from_values({y.channels, y.height, y.width}, y.data);
    auto diff = tb.sub(out_b, target);
    tb.backward(tb.scale(tb.sum(tb.mul(diff, diff)),
                         1.0 / static_cast<double>(y.size())));
    std::vector<double> gb;
    for (const auto& p : net_b.parameters())
        gb.insert(gb.end(), p->grad().begin(), p->grad().end());

    auto normalise = [](std::vector<double>& v) {
        double n = 0.0;
        for (double x : v)
            n += x * x;
        n = std::sqrt(n);
        for (double& x : v)
            x /= n;
    };
    normalise(ga);
    normalise(gb);
    for (std::size_t i = 0; i < ga.size(); ++i)
        CHECK(std::abs(ga[i] - gb[i]) < 1e-6);
}

TEST_CASE("numeric blow-up aborts with iteration index and partial trace") {
    Image y = noisy_phantom(PhantomKind::Step, 16, 25.0, 16);
    NetworkConfig net;
    net.seed = 17;
    TrainConfig cfg = quick_train(50);
    cfg.learning_rate = 1e150; // guaranteed overflow within a few steps
    try {
        denoise(y, ObjectiveConfig{}, net, cfg);
        FAIL("expected TrainingNumericError");
    } catch (const TrainingNumericError& e) {
        CHECK(e.iteration >= 1);
        CHECK(!e.partial_trace.empty());
        CHECK(std::string(e.what()).find("iteration") != std::string::npos);
    }
}

TEST_CASE("short end-to-end run improves PSNR on a small phantom") {
    Image clean = make_phantom(PhantomKind::Circles, 32, 32, 1);
    Image y = add_gaussian_noise(clean, {25.0, 18});
    NetworkConfig net;
    net.seed = 19;
    DenoiseResult dna_res = denoise(y, ObjectiveConfig{}, net, quick_train(300));
    const double noisy_db = psnr(y, clean);
    CHECK(psnr(dna_res.xhat, clean) > noisy_db + 1.0);

    DenoiseResult dip_res = denoise_dip_baseline(y, net, quick_train(300));
    CHECK(psnr(dip_res.xhat, clean) > noisy_db);
}
