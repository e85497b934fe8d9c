#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace exc {

enum class BasisFlavor { free_boundary, zero_boundary };

// Smooth space-time test functions H(t,x) = sum_ij c_ij phi_i(t) psi_j(x),
// with Bernstein polynomials of degree p in time and a trigonometric space
// family: {1, x, cos(pi x), cos(2 pi x), ...} for the free-boundary flavor
// (the affine term keeps plain linear tilts inside the span) and
// {sin(j pi x)} for the zero-boundary flavor. All derivatives are analytic.
class TestFunction {
public:
    TestFunction(BasisFlavor flavor, int p, int J, double T);

    BasisFlavor flavor() const { return flavor_; }
    int time_degree() const { return p_; }
    int space_count() const { return J_; }
    double horizon() const { return T_; }

    double coeff(int i, int j) const { return c_[idx(i, j)]; }
    void set_coeff(int i, int j, double v) { c_[idx(i, j)] = v; }

    double value(double t, double x) const;
    double dt(double t, double x) const;
    double dx(double t, double x) const;
    double dxx(double t, double x) const;

    // True when the Bernstein rows coincide, i.e. H(t,x) does not depend on
    // t. Exact coefficient comparison on purpose.
    bool time_constant() const;

    bool zero_everywhere() const;

    // Upper bound on sup |H|: Bernstein rows form a partition of unity and
    // every space basis function is bounded by 1, so the largest row sum of
    // absolute coefficients dominates.
    double sup_bound() const;

    double time_basis(int i, double t) const;
    double time_basis_dt(int i, double t) const;
    double space_basis(int j, double x) const;
    double space_basis_dx(int j, double x) const;
    double space_basis_dxx(int j, double x) const;

    // Space coefficients of the time slice t: d_j = sum_i phi_i(t) c_ij.
    std::vector<double> collapse_time(double t) const;
    std::vector<double> collapse_time_dt(double t) const;

    double slice_value(const std::vector<double>& d, double x) const;
    double slice_dx(const std::vector<double>& d, double x) const;

    static TestFunction linear_combination(double a, const TestFunction& X,
                                           double b, const TestFunction& Y);

    nlohmann::json to_json() const;
    static TestFunction from_json(const nlohmann::json& j);

private:
    size_t idx(int i, int j) const;

    BasisFlavor flavor_;
    int p_, J_;
    double T_;
    std::vector<double> c_; // (p+1) x J, row-major in the time index
};

// p = 0, single space coefficient helpers for the common tilts.
TestFunction affine_tilt(double slope, double T, double intercept = 0.0);
TestFunction cosine_tilt(int j, double amplitude, double T);

} // namespace exc
