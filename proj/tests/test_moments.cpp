#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <bit>
#include <cmath>
#include <vector>

#include "exc/moments.hpp"
#include "exc/rate_model.hpp"

using namespace exc;

namespace {

// Brute-force oracles, written against the definitions only: expectation as
// a direct sum of pow-products over the 2^l window states. The library path
// goes through expanded polynomials instead, so agreement is meaningful.
double occ_weight(int l, uint32_t w, double alpha) {
    int m = std::popcount(w);
    return std::pow(alpha, m) * std::pow(1.0 - alpha, l - m);
}

double brute_grade_rate(const BoundaryRateTable& t, int k, double alpha) {
    double v = 0.0;
    for (uint32_t from = 0; from < t.states(); ++from) {
        double r = 0.0;
        for (uint32_t to = 0; to < t.states(); ++to)
            if (std::popcount(to) - std::popcount(from) == k) r += t.rate(from, to);
        v += occ_weight(t.window_size(), from, alpha) * r;
    }
    return v;
}

double brute_F(const BoundaryRateTable& t, double alpha) {
    double v = 0.0;
    for (uint32_t from = 0; from < t.states(); ++from)
        v += occ_weight(t.window_size(), from, alpha) * h_boundary(t, from);
    return v;
}

} // namespace

TEST_CASE("window_expectation basics") {
    auto one = [](uint32_t) { return 1.0; };
    auto count = [](uint32_t w) { return double(std::popcount(w)); };
    for (double alpha : {0.0, 0.2, 0.5, 0.9, 1.0}) {
        CHECK(window_expectation(3, one, alpha) == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(window_expectation(4, count, alpha) ==
              doctest::Approx(4.0 * alpha).epsilon(1e-13));
    }
    CHECK_THROWS_AS(window_expectation(0, one, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(window_expectation(2, one, 1.5), std::invalid_argument);
}

TEST_CASE("h_boundary on the three-site preset") {
    RateModel m = build_l3(1.0, 2.0);
    // (1,0,1) only creates, at rate a0 = 17; the full window only destroys.
    CHECK(h_boundary(m.left, 0b101) == 17.0);
    CHECK(h_boundary(m.left, 0b111) == -1.0);
    CHECK(h_boundary(m.left, 0b001) == 5.0);
    CHECK(h_boundary(m.left, 0b011) == -5.0);
    CHECK_THROWS_AS(h_boundary(m.left, 8), std::invalid_argument);
}

TEST_CASE("frozen three-site values") {
    RateModel m = build_l3(1.0, 2.0);
    BoundaryMoments mom(m.left);

    CHECK(mom.F(0.3) == doctest::Approx(-0.272).epsilon(1e-12));
    CHECK(mom.B_k(1, 0.3) == doctest::Approx(2.884).epsilon(1e-12));
    CHECK(mom.D_minus_k(1, 0.3) == doctest::Approx(3.156).epsilon(1e-12));

    // Every move changes exactly one particle.
    for (double alpha : {0.0, 0.25, 0.7, 1.0}) {
        CHECK(mom.B_k(2, alpha) == 0.0);
        CHECK(mom.B_k(3, alpha) == 0.0);
        CHECK(mom.D_minus_k(2, alpha) == 0.0);
        CHECK(mom.D_minus_k(3, alpha) == 0.0);
    }

    // B_1(alpha) = (1-a)^3 + 17 a^2 (1-a) + 10 a (1-a)^2 = 1 + 7a - 8a^3.
    const auto& b1 = mom.B_k_poly(1);
    REQUIRE(b1.c.size() == 4);
    CHECK(b1.c[0] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(b1.c[1] == doctest::Approx(7.0).epsilon(1e-14));
    CHECK(b1.c[2] == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(b1.c[3] == doctest::Approx(-8.0).epsilon(1e-14));
}

TEST_CASE("three-site F matches its closed form on a fine grid") {
    const double a = 1.0, b = 2.0;
    RateModel m = build_l3(a, b);
    SideMoments mom(m);
    for (int i = 0; i <= 100; ++i) {
        double alpha = i / 100.0;
        double u = 2.0 * alpha - 1.0;
        double closed = (b - a) * u - b * u * u * u;
        CHECK(mom.left.F(alpha) == doctest::Approx(closed).epsilon(1e-12));
        // The two windows are mirror images of each other, so the drifts
        // coincide as functions of the density.
        CHECK(mom.right.F(alpha) == doctest::Approx(mom.left.F(alpha)).epsilon(1e-14));
    }
    CHECK(mom.left.F(0.5) == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("three-site creation rate curvature") {
    // (B_1)'' = -48 alpha for (a, b, a2) = (1, 2, 5): concave on [0,1], with
    // value 4a - 4 a2 + 8b - 24b = -48 at alpha = 1.
    RateModel m = build_l3(1.0, 2.0);
    BoundaryMoments mom(m.left);
    Poly b1pp = mom.B_k_poly(1).derivative().derivative();
    CHECK(b1pp(1.0) == doctest::Approx(-48.0).epsilon(1e-12));
    for (int i = 0; i <= 100; ++i) CHECK(b1pp(i / 100.0) <= 1e-12);
}

TEST_CASE("particle-hole symmetry of the three-site model") {
    RateModel m = build_l3(1.0, 2.0, 6.5);
    BoundaryMoments mom(m.left);
    for (int i = 0; i <= 50; ++i) {
        double alpha = i / 50.0;
        CHECK(mom.D_minus_k(1, alpha) ==
              doctest::Approx(mom.B_k(1, 1.0 - alpha)).epsilon(1e-12));
    }
}

TEST_CASE("moment identities across models") {
    std::vector<RateModel> models;
    models.push_back(build_l3(1.0, 2.0));
    models.push_back(random_irreducible_model(2, 7));
    models.push_back(random_irreducible_model(3, 19));
    models.push_back(build_l1(0.3, 0.8, 1.5, 0.5));

    for (const auto& model : models) {
        for (Side side : {Side::left, Side::right}) {
            const auto& t = model.table(side);
            BoundaryMoments mom(t);
            const int l = t.window_size();
            for (int i = 0; i <= 100; ++i) {
                double alpha = i / 100.0;

                double graded = 0.0;
                for (int k = 1; k <= l; ++k)
                    graded += k * (mom.B_k(k, alpha) - mom.D_minus_k(k, alpha));
                CHECK(mom.F(alpha) ==
                      doctest::Approx(mom.B(alpha) - mom.D(alpha)).epsilon(1e-12));
                CHECK(mom.F(alpha) == doctest::Approx(graded).epsilon(1e-12));

                CHECK(mom.F(alpha) == doctest::Approx(brute_F(t, alpha)).epsilon(1e-12));
                for (int k = 1; k <= l; ++k) {
                    CHECK(mom.B_k(k, alpha) ==
                          doctest::Approx(brute_grade_rate(t, k, alpha)).epsilon(1e-12));
                    CHECK(mom.D_minus_k(k, alpha) ==
                          doctest::Approx(brute_grade_rate(t, -k, alpha)).epsilon(1e-12));
                }

                CHECK(mom.bfrak(alpha, 0.0) == 0.0);
                CHECK(mom.bfrak_dM(alpha, 0.0) ==
                      doctest::Approx(mom.F(alpha)).epsilon(1e-12));
                CHECK(mom.pfrak(alpha, 0.0) ==
                      doctest::Approx(mom.F(alpha)).epsilon(1e-12));
                CHECK(mom.pfrak(alpha, 0.0, PfrakVariant::paper) == 0.0);
            }
        }
    }
}

TEST_CASE("frozen tilted-moment example") {
    RateModel m = build_l3(1.0, 2.0);
    BoundaryMoments mom(m.left);
    for (double M : {-2.0, -0.5, 0.1, 1.0, 3.0}) {
        double expect = std::expm1(M) * 2.884 + std::expm1(-M) * 3.156;
        CHECK(mom.bfrak(0.3, M) == doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("tilted moments: convexity, derivatives, cap") {
    RateModel m = random_irreducible_model(3, 3);
    BoundaryMoments mom(m.right);

    for (double alpha : {0.15, 0.5, 0.8}) {
        for (double M : {-3.0, -1.0, 0.0, 0.4, 2.5}) {
            CHECK(mom.bfrak_d2M(alpha, M) > 0.0);

            const double h = 1e-5;
            double fd = (mom.bfrak(alpha, M + h) - mom.bfrak(alpha, M - h)) / (2.0 * h);
            CHECK(mom.pfrak(alpha, M) ==
                  doctest::Approx(fd).epsilon(1e-8));
            CHECK(mom.pfrak(alpha, M, PfrakVariant::paper) ==
                  doctest::Approx(M * mom.bfrak_dM(alpha, M)).epsilon(1e-13));
        }
        // Convexity also pointwise in M via chords.
        double lo = mom.bfrak(alpha, -1.0), hi = mom.bfrak(alpha, 1.0);
        CHECK(mom.bfrak(alpha, 0.0) <= 0.5 * (lo + hi) + 1e-13);
    }

    CHECK_THROWS_AS(mom.bfrak(0.3, 200.0), std::domain_error);
    CHECK_THROWS_AS(mom.bfrak_dM(0.3, -200.0), std::domain_error);
    CHECK_NOTHROW(mom.bfrak(0.3, 500.0 / 3.0 - 1e-9));
}

TEST_CASE("single-site reservoirs have affine drift") {
    RateModel m = build_l1(0.3, 0.8, 1.5, 2.0);
    SideMoments mom(m);
    for (int i = 0; i <= 20; ++i) {
        double alpha = i / 20.0;
        CHECK(mom.left.F(alpha) == doctest::Approx(1.5 * (0.3 - alpha)).epsilon(1e-13));
        CHECK(mom.right.F(alpha) == doctest::Approx(2.0 * (0.8 - alpha)).epsilon(1e-13));
    }
}
