#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <map>

#include "exc/rate_model.hpp"
#include "exc/simulator.hpp"

using namespace exc;

namespace {

Configuration config_from_bits(int N, int l, std::initializer_list<int> occ) {
    Configuration c(N, l);
    int site = 1;
    for (int v : occ) c.set_occ(site++, v);
    REQUIRE(site == N);
    return c;
}

SimConfig base_config(int N, double T) {
    SimConfig cfg;
    cfg.N = N;
    cfg.model = build_l3(1.0, 2.0);
    cfg.gamma = SpaceProfile::constant(0.5);
    cfg.T = T;
    cfg.observables = standard_observables();
    return cfg;
}

} // namespace

TEST_CASE("catalog for a hand-worked configuration") {
    SimConfig cfg = base_config(8, 1.0);
    Simulator sim(cfg);
    sim.set_configuration(config_from_bits(8, 3, {1, 0, 1, 1, 0, 1, 0}));

    auto events = sim.catalog();
    REQUIRE(events.size() == 7);

    std::map<uint32_t, double> bulk;
    std::map<uint32_t, double> left, right;
    for (const auto& e : events) {
        switch (e.kind) {
        case Event::Kind::bulk: bulk[e.index] = e.rate; break;
        case Event::Kind::left: left[e.index] = e.rate; break;
        case Event::Kind::right: right[e.index] = e.rate; break;
        }
    }

    // Discrepant bonds of (1,0,1,1,0,1,0) are 1,2,4,5,6 and each swaps at N^2.
    CHECK(bulk == std::map<uint32_t, double>{
                      {1, 64.0}, {2, 64.0}, {4, 64.0}, {5, 64.0}, {6, 64.0}});
    // Left window reads (1,0,1) boundary-first = mask 5; the middle-site flip
    // lands on mask 7 with outer sites equal and unlike the middle: rate
    // N * a0 = 8 * 17.
    CHECK(left == std::map<uint32_t, double>{{7, 136.0}});
    // Right window reads sites 7,6,5 = (0,1,0) = mask 2, flipping to mask 0.
    CHECK(right == std::map<uint32_t, double>{{0, 136.0}});

    CHECK(sim.total_rate() == doctest::Approx(592.0).epsilon(1e-14));
}

TEST_CASE("a zero tilt multiplies every rate by exactly one") {
    SimConfig plain = base_config(8, 1.0);
    SimConfig tilted = plain;
    tilted.tilt = TestFunction(BasisFlavor::free_boundary, 0, 2, 1.0); // all-zero coeffs

    Simulator a(plain), b(tilted);
    auto eta = config_from_bits(8, 3, {1, 0, 1, 1, 0, 1, 0});
    a.set_configuration(eta);
    b.set_configuration(eta);

    auto ea = a.catalog(), eb = b.catalog();
    REQUIRE(ea.size() == eb.size());
    for (size_t i = 0; i < ea.size(); ++i) {
        CHECK(ea[i].kind == eb[i].kind);
        CHECK(ea[i].index == eb[i].index);
        CHECK(ea[i].rate == eb[i].rate); // bitwise, not approximate
    }
}

TEST_CASE("swap involution and replacement mechanics") {
    auto c = config_from_bits(8, 3, {1, 0, 1, 1, 0, 1, 0});
    auto before = c;
    c.apply_swap(4);
    CHECK(c.occ(4) == 0);
    CHECK(c.occ(5) == 1);
    CHECK(c.particle_count() == before.particle_count());
    c.apply_swap(4);
    CHECK(c == before);

    c.apply_replacement(Side::left, 0b111);
    CHECK(c.occ(1) == 1);
    CHECK(c.occ(2) == 1);
    CHECK(c.occ(3) == 1);
    CHECK(c.window_state(Side::left) == 0b111);

    c.apply_replacement(Side::right, 0b001);
    CHECK(c.occ(7) == 1); // boundary-first bit 0 is site N-1
    CHECK(c.occ(6) == 0);
    CHECK(c.occ(5) == 0);
    CHECK(c.window_state(Side::right) == 0b001);
}

TEST_CASE("empirical pairing against a frozen value") {
    Configuration c(8, 3);
    c.set_occ(2, 1);
    c.set_occ(5, 1);
    double want = (0.25 * 0.25 + 0.625 * 0.625) / 7.0;
    CHECK(empirical_pair(c, SpaceProfile::power(1.0, 2)) ==
          doctest::Approx(want).epsilon(1e-15));

    auto id = affine_tilt(1.0, 1.0); // H(t,x) = x
    CHECK(empirical_pair(c, id, 0.3) ==
          doctest::Approx((0.25 + 0.625) / 7.0).epsilon(1e-15));
}

TEST_CASE("incremental catalog matches a from-scratch rebuild") {
    auto run_checked = [](int N, std::optional<TestFunction> tilt, double T) {
        SimConfig cfg = base_config(N, T);
        cfg.tilt = std::move(tilt);
        cfg.validate_incremental = true;
        Rng rng = replica_rng(2024, 1);
        auto traj = simulate(cfg, rng); // throws on any divergence
        CHECK(traj.bulk_events + traj.left_events + traj.right_events > 0);
    };

    run_checked(8, std::nullopt, 0.05);  // tightest legal lattice for l = 3
    run_checked(32, std::nullopt, 0.02);
    run_checked(32, affine_tilt(0.5, 1.0), 0.02);

    TestFunction wobble(BasisFlavor::free_boundary, 1, 2, 1.0);
    wobble.set_coeff(0, 1, 0.4);
    wobble.set_coeff(1, 1, -0.2); // genuinely time dependent
    run_checked(16, wobble, 0.01);
}

TEST_CASE("waiting times of a single-event catalog") {
    BoundaryRateTable left(1), right(1);
    left.set_rate(0, 1, 2.0);
    right.set_rate(1, 0, 3.0); // silent from the all-empty state

    SimConfig cfg;
    cfg.N = 4;
    cfg.model = make_model(left, right);
    cfg.gamma = SpaceProfile::constant(0.0);
    cfg.T = 1.0;
    cfg.observables = {observable_by_name("one")};

    Simulator sim(cfg);
    Configuration empty(4, 1);
    Rng rng(99);

    const double lambda = 4.0 * 2.0; // N * rate of the only move
    const int M = 20000;
    double sum = 0.0;
    for (int i = 0; i < M; ++i) {
        sim.set_configuration(empty);
        REQUIRE(sim.total_rate() == doctest::Approx(lambda).epsilon(1e-14));
        auto [dt, ev] = sim.step(rng);
        CHECK(ev.kind == Event::Kind::left);
        CHECK(ev.index == 1);
        sum += dt;
    }
    double mean = sum / M;
    // Exponential(lambda): sd of the sample mean is 1/(lambda sqrt(M)).
    CHECK(std::abs(mean - 1.0 / lambda) < 3.0 / (lambda * std::sqrt(double(M))));
}

TEST_CASE("sample time handling") {
    SimConfig cfg = base_config(16, 0.1);
    cfg.sample_times = {0.05, 0.02, 0.0, 0.05}; // unsorted, duplicated, no T
    Rng rng = replica_rng(7, 0);
    auto traj = simulate(cfg, rng);

    REQUIRE(traj.times == std::vector<double>{0.0, 0.02, 0.05, 0.1});
    REQUIRE(traj.values.size() == 4);
    CHECK(traj.values[0] == traj.initial_values); // t = 0 snapshot
    for (double g : traj.gen_integral[0]) CHECK(g == 0.0);

    SimConfig bad = cfg;
    bad.sample_times = {0.2};
    CHECK_THROWS_AS(Simulator{bad}, std::invalid_argument);
}

TEST_CASE("fixed seed and replica give identical trajectories") {
    SimConfig cfg = base_config(24, 0.05);
    cfg.tilt = affine_tilt(0.5, 1.0);

    Rng r1 = replica_rng(31337, 4);
    Rng r2 = replica_rng(31337, 4);
    auto a = simulate(cfg, r1);
    auto b = simulate(cfg, r2);
    CHECK(a.values == b.values);
    CHECK(a.gen_integral == b.gen_integral);
    CHECK(a.bulk_events == b.bulk_events);

    Rng r3 = replica_rng(31337, 5);
    auto c = simulate(cfg, r3);
    CHECK(a.values != c.values);
}

TEST_CASE("generator integral makes the Dynkin residual small in mean") {
    SimConfig cfg = base_config(16, 0.1);
    const int M = 200;
    for (size_t o = 0; o < cfg.observables.size(); ++o) {
        double sum = 0.0, sumsq = 0.0;
        for (int rep = 0; rep < M; ++rep) {
            Rng rng = replica_rng(555, uint64_t(rep) + 1000 * o);
            auto traj = simulate(cfg, rng);
            double r = dynkin_residual(traj, o);
            sum += r;
            sumsq += r * r;
        }
        double mean = sum / M;
        double sd = std::sqrt(std::max(sumsq / M - mean * mean, 1e-30));
        CHECK(std::abs(mean) < 5.0 * sd / std::sqrt(double(M)));
    }
}

TEST_CASE("tilt guards") {
    SimConfig cfg = base_config(16, 1.0);
    cfg.tilt = affine_tilt(2000.0, 1.0);
    CHECK_THROWS_AS(Simulator{cfg}, std::domain_error);

    SimConfig shortT = base_config(16, 1.0);
    shortT.tilt = affine_tilt(0.5, 0.5); // horizon ends before the run
    CHECK_THROWS_AS(Simulator{shortT}, std::invalid_argument);
}
