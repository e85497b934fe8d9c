#include "exc/moments.hpp"

#include <bit>
#include <cmath>
#include <stdexcept>

namespace exc {

Poly& Poly::add_scaled(const Poly& other, double w) {
    if (other.c.size() > c.size()) c.resize(other.c.size(), 0.0);
    for (size_t i = 0; i < other.c.size(); ++i) c[i] += w * other.c[i];
    return *this;
}

Poly Poly::derivative() const {
    Poly d;
    if (c.size() > 1) {
        d.c.resize(c.size() - 1);
        for (size_t i = 1; i < c.size(); ++i) d.c[i - 1] = double(i) * c[i];
    }
    return d;
}

double window_expectation(int l, const std::function<double(uint32_t)>& f,
                          double alpha) {
    if (l < 1 || l > BoundaryRateTable::max_window)
        throw std::invalid_argument("window size must be in [1, 16]");
    if (!(alpha >= 0.0 && alpha <= 1.0))
        throw std::invalid_argument("density must lie in [0, 1]");
    // Group by particle count so each weight is one pow-product, not 2^l of
    // them.
    std::vector<double> by_count(size_t(l) + 1, 0.0);
    for (uint32_t w = 0; w < (1u << l); ++w)
        by_count[size_t(std::popcount(w))] += f(w);
    double v = 0.0;
    for (int m = 0; m <= l; ++m)
        v += by_count[size_t(m)] * std::pow(alpha, m) * std::pow(1.0 - alpha, l - m);
    return v;
}

double h_boundary(const BoundaryRateTable& table, uint32_t from) {
    if (from >= table.states())
        throw std::invalid_argument("window state mask out of range");
    double h = 0.0;
    const int m = std::popcount(from);
    for (uint32_t to = 0; to < table.states(); ++to) {
        double r = table.rate(from, to);
        if (r > 0.0) h += r * double(std::popcount(to) - m);
    }
    return h;
}

namespace {

// alpha^m (1-alpha)^(l-m) expanded in ascending powers of alpha. Binomials
// stay integral, so the coefficients are exact.
Poly occupancy_weight_poly(int l, int m) {
    Poly p;
    p.c.assign(size_t(l) + 1, 0.0);
    double binom = 1.0;
    for (int j = 0; j <= l - m; ++j) {
        p.c[size_t(m + j)] = ((j % 2) ? -binom : binom);
        binom = binom * double(l - m - j) / double(j + 1);
    }
    return p;
}

} // namespace

BoundaryMoments::BoundaryMoments(const BoundaryRateTable& table)
    : l_(table.window_size()) {
    Bk_.assign(size_t(l_), Poly{});
    Dk_.assign(size_t(l_), Poly{});

    for (uint32_t from = 0; from < table.states(); ++from) {
        std::vector<double> up(size_t(l_) + 1, 0.0), down(size_t(l_) + 1, 0.0);
        const int m = std::popcount(from);
        for (uint32_t to = 0; to < table.states(); ++to) {
            double r = table.rate(from, to);
            if (r <= 0.0) continue;
            int k = std::popcount(to) - m;
            if (k > 0)
                up[size_t(k)] += r;
            else if (k < 0)
                down[size_t(-k)] += r;
        }
        Poly w = occupancy_weight_poly(l_, m);
        for (int k = 1; k <= l_; ++k) {
            if (up[size_t(k)] != 0.0) Bk_[size_t(k) - 1].add_scaled(w, up[size_t(k)]);
            if (down[size_t(k)] != 0.0) Dk_[size_t(k) - 1].add_scaled(w, down[size_t(k)]);
        }
    }

    for (int k = 1; k <= l_; ++k) {
        B_.add_scaled(Bk_[size_t(k) - 1], double(k));
        D_.add_scaled(Dk_[size_t(k) - 1], double(k));
    }
    F_ = B_;
    F_.add_scaled(D_, -1.0);
}

double BoundaryMoments::B_k(int k, double alpha) const {
    return B_k_poly(k)(alpha);
}

double BoundaryMoments::D_minus_k(int k, double alpha) const {
    return D_minus_k_poly(k)(alpha);
}

void BoundaryMoments::check_cap(double M) const {
    if (!std::isfinite(M) || std::abs(M) * l_ > exponent_cap)
        throw std::domain_error("tilt strength exceeds the exponent cap");
}

double BoundaryMoments::bfrak(double alpha, double M) const {
    check_cap(M);
    double v = 0.0;
    for (int k = 1; k <= l_; ++k) {
        v += std::expm1(M * k) * Bk_[size_t(k) - 1](alpha);
        v += std::expm1(-M * k) * Dk_[size_t(k) - 1](alpha);
    }
    return v;
}

double BoundaryMoments::bfrak_dM(double alpha, double M) const {
    check_cap(M);
    double v = 0.0;
    for (int k = 1; k <= l_; ++k) {
        v += k * std::exp(M * k) * Bk_[size_t(k) - 1](alpha);
        v -= k * std::exp(-M * k) * Dk_[size_t(k) - 1](alpha);
    }
    return v;
}

double BoundaryMoments::bfrak_d2M(double alpha, double M) const {
    check_cap(M);
    double v = 0.0;
    for (int k = 1; k <= l_; ++k) {
        v += double(k) * k * std::exp(M * k) * Bk_[size_t(k) - 1](alpha);
        v += double(k) * k * std::exp(-M * k) * Dk_[size_t(k) - 1](alpha);
    }
    return v;
}

double BoundaryMoments::pfrak(double alpha, double M, PfrakVariant v) const {
    double d = bfrak_dM(alpha, M);
    return v == PfrakVariant::consistent ? d : M * d;
}

} // namespace exc
