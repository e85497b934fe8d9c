#pragma once

#include <functional>
#include <optional>
#include <vector>

#include <json.hpp>

#include "exc/moments.hpp"
#include "exc/newton.hpp"
#include "exc/path_density.hpp"
#include "exc/rate_model.hpp"
#include "exc/test_function.hpp"

namespace exc {

struct LdpOptions {
    int p = 6; // Bernstein degree of the time basis
    int J = 8; // space basis size
    NewtonOptions newton;
};

// The path cost against one test function:
//   <rho_T, H_T> - <gamma, H_0> - int <rho, dt H> + int <grad rho, grad H>
//   - int <sigma(rho), (grad H)^2>
//   - int [bfrak^-(rho(0), H(t,0)) + bfrak^+(rho(1), H(t,1))] dt,
// trapezoid quadrature on the path's grid throughout. The gradient pairing
// enters with a plus sign: that is the convention under which weak solutions
// of the boundary-driven heat equation cost exactly zero.
double eval_J(const PathDensity& path, const TestFunction& H,
              const RateModel& model,
              const std::function<double(double)>& gamma);

struct EvalResult {
    double value = 0.0;
    TestFunction argmax;
    int iterations = 0;
    double grad_norm = 0.0;
};

// sup_H J over the free-boundary basis; concave, solved by damped Newton.
EvalResult eval_I(const PathDensity& path, const RateModel& model,
                  const std::function<double(double)>& gamma,
                  const LdpOptions& opt = {});
// Same with gamma taken from the path's first slice.
EvalResult eval_I(const PathDensity& path, const RateModel& model,
                  const LdpOptions& opt = {});

// Energy functional: sup over zero-boundary H of
// int int rho grad H - (1/2) int int sigma(rho) H^2. The quadratic penalty
// carries H itself (not grad H), so the closed form pairs with 1/sigma.
EvalResult eval_Q(const PathDensity& path, const LdpOptions& opt = {});
double closed_form_Q(const PathDensity& path);

// Normalized cumulative resistance Xi(t,x), one row per time slice.
std::vector<std::vector<double>> xi_field(const PathDensity& path);

struct BoundaryCharges {
    std::vector<double> a; // <dt rho, 1-Xi> - <grad rho, grad Xi>
    std::vector<double> b; // <dt rho, Xi> + <grad rho, grad Xi>
};
BoundaryCharges boundary_charges(const PathDensity& path);

// zeta = 1 / <1/sigma(rho_t)> for one time slice.
double zeta(const PathDensity& path, int slice);

// zeta (x-y)^2 + bfrak^-(rho0, x) + bfrak^+(rho1, y)
double upsilon(const SideMoments& mom, double rho0, double rho1, double zeta,
               double x, double y);
double upsilon(const RateModel& model, double rho0, double rho1, double zeta,
               double x, double y);

struct PhiResult {
    double value = 0.0;
    double x = 0.0, y = 0.0; // maximizer
    bool unbounded = false;
    int iterations = 0;
};

// Phi(a,b) = sup_{x,y} [a x + b y - Upsilon(x,y)], damped Newton from the
// origin with a grid-scan fallback; degenerate tables that lack a creation
// or destruction channel can make the supremum infinite, reported by the
// unbounded flag.
PhiResult phi_legendre(const SideMoments& mom, double rho0, double rho1,
                       double zeta, double a, double b,
                       const NewtonOptions& opt = {});
PhiResult phi_legendre(const RateModel& model, double rho0, double rho1,
                       double zeta, double a, double b,
                       const NewtonOptions& opt = {});

struct DecompositionReport {
    double I = 0.0;  // full rate functional on the free-boundary basis
    double I1 = 0.0; // bulk part, zero-boundary test functions
    double I2 = 0.0; // boundary part, int Phi_t(a(t), b(t)) dt
    std::vector<double> a, b, zeta;      // traces at the path's time nodes
    std::vector<double> x_star, y_star;  // per-slice Legendre maximizers
    int i_iterations = 0, i1_iterations = 0;
    double i_grad_norm = 0.0, i1_grad_norm = 0.0;
    bool any_phi_unbounded = false;

    nlohmann::json to_json() const;
};

DecompositionReport decompose_I(const PathDensity& path, const RateModel& model,
                                const LdpOptions& opt = {});

} // namespace exc
