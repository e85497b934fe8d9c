#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "exc/rate_model.hpp"

namespace exc {

// Polynomial in the density, coefficients by ascending power.
struct Poly {
    std::vector<double> c;

    double operator()(double x) const {
        double v = 0.0;
        for (size_t i = c.size(); i-- > 0;) v = v * x + c[i];
        return v;
    }
    Poly& add_scaled(const Poly& other, double w);
    Poly derivative() const;
};

// Exact expectation of f over a window of iid Bernoulli(alpha) sites.
double window_expectation(int l, const std::function<double(uint32_t)>& f,
                          double alpha);

// Net particle drift of one replacement sweep out of window state `from`.
double h_boundary(const BoundaryRateTable& table, uint32_t from);

// Jump sizes are graded by the net particle change k; everything downstream
// (F, the tilted moments, the boundary Legendre transforms) is a weighted
// sum of the per-grade rate expectations, which are exact polynomials in the
// density of degree <= l.
enum class PfrakVariant { consistent, paper };

class BoundaryMoments {
public:
    explicit BoundaryMoments(const BoundaryRateTable& table);

    int window_size() const { return l_; }

    // Expected rate of jumps that create (destroy) exactly k particles.
    double B_k(int k, double alpha) const;
    double D_minus_k(int k, double alpha) const;

    // Total creation / destruction / net drift rates.
    double B(double alpha) const { return B_(alpha); }
    double D(double alpha) const { return D_(alpha); }
    double F(double alpha) const { return F_(alpha); }

    // Sum_k (e^{Mk}-1) B_k + (e^{-Mk}-1) D_{-k} and its M-derivatives.
    double bfrak(double alpha, double M) const;
    double bfrak_dM(double alpha, double M) const;
    double bfrak_d2M(double alpha, double M) const;

    // Boundary flux under a tilt of strength M. The consistent variant is
    // d/dM bfrak, which reduces to F at M = 0; the literal variant carries
    // an extra factor M.
    double pfrak(double alpha, double M,
                 PfrakVariant v = PfrakVariant::consistent) const;

    const Poly& B_k_poly(int k) const { return Bk_.at(size_t(k) - 1); }
    const Poly& D_minus_k_poly(int k) const { return Dk_.at(size_t(k) - 1); }
    const Poly& F_poly() const { return F_; }

    // Largest |M|*l the exponentials are allowed before bfrak refuses to
    // evaluate; keeps e^{Mk} comfortably inside double range.
    static constexpr double exponent_cap = 500.0;

private:
    void check_cap(double M) const;

    int l_;
    std::vector<Poly> Bk_, Dk_; // index k-1
    Poly B_, D_, F_;
};

struct SideMoments {
    BoundaryMoments left;
    BoundaryMoments right;

    explicit SideMoments(const RateModel& m)
        : left(m.left), right(m.right) {}
    const BoundaryMoments& operator()(Side s) const {
        return s == Side::left ? left : right;
    }
};

} // namespace exc
