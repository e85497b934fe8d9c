#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "exc/exact_law.hpp"
#include "exc/simulator.hpp"

using namespace exc;

TEST_CASE("zero horizon returns the initial-profile pairing") {
    auto model = build_l3(1.0, 2.0);
    auto gamma = SpaceProfile::affine(0.2, 0.5);
    auto H = SpaceProfile::power(1.0, 2);

    double got = exact_law_small_N(model, 8, gamma, 0.0, H);
    double want = 0.0;
    for (int site = 1; site <= 7; ++site) {
        double x = site / 8.0;
        want += gamma(x) * H(x);
    }
    want /= 7.0;
    CHECK(got == doctest::Approx(want).epsilon(1e-13));
}

TEST_CASE("two uniformization step sizes agree") {
    auto model = build_l3(1.0, 2.0);
    auto gamma = SpaceProfile::constant(0.5);
    std::vector<Observable> battery = standard_observables();

    ExactLawOptions coarse, fine;
    coarse.lambda_scale = 1.05;
    fine.lambda_scale = 2.3;
    auto a = exact_law_small_N(model, 8, gamma, 0.2, battery, coarse);
    auto b = exact_law_small_N(model, 8, gamma, 0.2, battery, fine);
    REQUIRE(a.size() == b.size());
    for (size_t o = 0; o < a.size(); ++o)
        CHECK(std::abs(a[o] - b[o]) < 1e-8);
}

TEST_CASE("equilibrium reservoirs at half filling keep the law flat") {
    // Bernoulli(1/2) is invariant for symmetric swaps plus single-site
    // reservoirs at density 1/2, so every observable keeps its t=0 mean.
    auto model = build_l1(0.5, 0.5, 1.3, 0.7);
    auto gamma = SpaceProfile::constant(0.5);
    std::vector<Observable> battery = standard_observables();

    auto got = exact_law_small_N(model, 6, gamma, 0.3, battery);
    for (size_t o = 0; o < battery.size(); ++o) {
        double want = 0.0;
        for (int site = 1; site <= 5; ++site) want += battery[o].f(site / 6.0);
        want *= 0.5 / 5.0;
        CHECK(got[o] == doctest::Approx(want).epsilon(1e-9));
    }
}

TEST_CASE("monte carlo agrees with the transient law") {
    auto model = build_l3(1.0, 2.0);
    SimConfig cfg;
    cfg.N = 8;
    cfg.model = model;
    cfg.gamma = SpaceProfile::constant(0.5);
    cfg.T = 0.2;
    cfg.observables = {observable_by_name("one"), observable_by_name("x")};

    auto exact = exact_law_small_N(model, cfg.N, cfg.gamma, cfg.T, cfg.observables);

    const int M = 3000;
    std::vector<double> sum(2, 0.0), sumsq(2, 0.0);
    for (int rep = 0; rep < M; ++rep) {
        Rng rng = replica_rng(4242, uint64_t(rep));
        auto traj = simulate(cfg, rng);
        for (size_t o = 0; o < 2; ++o) {
            double v = traj.values.back()[o];
            sum[o] += v;
            sumsq[o] += v * v;
        }
    }
    for (size_t o = 0; o < 2; ++o) {
        double mean = sum[o] / M;
        double var = std::max(sumsq[o] / M - mean * mean, 0.0);
        double se = std::sqrt(var / M);
        CHECK(std::abs(mean - exact[o]) < 4.0 * se);
    }
}

TEST_CASE("oracle guards") {
    auto model = build_l3(1.0, 2.0);
    auto g = SpaceProfile::constant(0.5);
    auto H = SpaceProfile::constant(1.0);

    CHECK_THROWS_AS(exact_law_small_N(model, 17, g, 0.1, H),
                    std::invalid_argument); // 2^16 states
    CHECK_THROWS_AS(exact_law_small_N(model, 8, g, 50.0, H),
                    std::overflow_error); // Lambda * T cap

    ExactLawOptions bad;
    bad.lambda_scale = 0.5;
    CHECK_THROWS_AS(exact_law_small_N(model, 8, g, 0.1, H, bad),
                    std::invalid_argument);

    auto badgamma = SpaceProfile::affine(-0.4, 0.2);
    CHECK_THROWS_AS(exact_law_small_N(model, 8, badgamma, 0.1, H),
                    std::invalid_argument);
}
