#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "exc/grid.hpp"
#include "exc/moments.hpp"
#include "exc/rate_model.hpp"
#include "exc/test_function.hpp"

namespace exc {

enum class TimeScheme { explicit_euler, crank_nicolson };

struct SolverOptions {
    double T = 1.0;
    // 0 picks the largest stable step 0.4 dx^2 (then rounds so snapshots
    // divide T evenly). Explicit runs must satisfy dt <= 0.4 dx^2, and with
    // a tilt also the advection bound dt <= 0.25 dx / max(1, 2 sup|grad G|).
    double dt = 0.0;
    int max_snapshots = 2001;
    // Sample gamma at nodes (default) or average it over the surrounding
    // half-cells (for discontinuous initial data).
    bool cell_average = false;
    PfrakVariant variant = PfrakVariant::consistent;
    TimeScheme scheme = TimeScheme::explicit_euler;
    double cn_tol = 1e-12;
    int cn_max_iters = 50;
};

// Heat equation with the nonlinear flux boundary conditions
//   grad rho(0) = -F_-(rho(0)),  grad rho(1) = F_+(rho(1)).
DensityField solve_hydro(const std::function<double(double)>& gamma,
                         const RateModel& model, const Grid& grid,
                         const SolverOptions& opt);

// Tilted equation d_t rho = lap rho - 2 grad(sigma(rho) grad G), with
// boundary fluxes given by the tilted reservoir currents: the inflow at
// x = 0 is pfrak^-(rho(0), G(t,0)) and at x = 1 it is pfrak^+(rho(1), G(t,1)).
// An absent or identically-zero G runs the exact solve_hydro code path.
DensityField solve_perturbed(const std::function<double(double)>& gamma,
                             const RateModel& model,
                             const std::optional<TestFunction>& G,
                             const Grid& grid, const SolverOptions& opt);

// Constant-in-space stationary data: rho(x) = (beta - alpha) x + alpha with
// -F_-(alpha) = F_+(beta) = beta - alpha.
struct StationaryProfile {
    double alpha = 0.0;
    double beta = 0.0;
    double residual_left = 0.0;  // |-F_-(alpha) - (beta - alpha)|
    double residual_right = 0.0; // |F_+(beta) - (beta - alpha)|

    double operator()(double x) const { return (beta - alpha) * x + alpha; }
};

std::vector<StationaryProfile> stationary_profiles(const RateModel& model,
                                                   int scan_points = 2000,
                                                   double tol = 1e-12);

// Time-integration probe of linear stability: perturb the profile up and
// down, run the flow, and see whether the perturbation contracts. The
// labeling is heuristic, not a theorem.
enum class Stability { stable, unstable, marginal };
std::string stability_name(Stability s);
Stability stability_heuristic(const RateModel& model,
                              const StationaryProfile& profile,
                              const Grid& grid, double eps = 1e-2,
                              double T = 1.0);

// r(t_k) = int rho_{t_k} - int rho_0 - int_0^{t_k} [F_+(rho_s(1)) +
// F_-(rho_s(0))] ds, by trapezoidal quadrature over the stored snapshots.
// The tilted overload replaces F_+/F_- with the pfrak currents of G.
std::vector<double> mass_balance_residual(const DensityField& field,
                                          const RateModel& model);
std::vector<double> mass_balance_residual(
    const DensityField& field, const RateModel& model,
    const std::optional<TestFunction>& G,
    PfrakVariant variant = PfrakVariant::consistent);

struct BoundsReport {
    bool pass = false;
    double eps = 0.0;    // distance from {0,1} attained for t >= t0
    double bad_t = -1.0; // first violation, when pass is false
    double bad_x = -1.0;
    std::string message;
};

// (i) every value within [-tol, 1 + tol]; (ii) from t0 on, the field sits
// inside [eps, 1 - eps] for a strictly positive reported eps.
BoundsReport parabolic_bounds_check(const DensityField& field,
                                    double t0 = -1.0, // default T/10
                                    double tol = 1e-12);

struct EntropyReport {
    bool pass = false;   // supplied C0 dominates at every snapshot time
    double min_C0 = 0.0; // smallest constant that works for this field
    double max_gap = 0.0; // sup_t (LHS - RHS) for the supplied C0
};

// Checks int_0^t int (grad rho)^2 / sigma(rho) + boundary dissipation
// <= C0 t + int V0(gamma) - int V0(rho_t), with V0 the Bernoulli entropy
// x log x + (1-x) log(1-x). The field must stay strictly inside (0,1).
EntropyReport entropy_inequality_check(const DensityField& field,
                                       const RateModel& model, double C0);

} // namespace exc
