#include "exc/heat_solver.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "exc/numeric.hpp"

namespace exc {

namespace {

// Space-basis sup bound on |grad G| over [0,1] x [0,T]: Bernstein time
// weights sum to one and |d/dx| of the space family is 0, 1, or j pi.
double tilt_grad_bound(const TestFunction& g) {
    double worst = 0.0;
    for (int i = 0; i <= g.time_degree(); ++i) {
        double row = 0.0;
        for (int j = 0; j < g.space_count(); ++j) {
            double scale;
            if (g.flavor() == BasisFlavor::free_boundary)
                scale = j == 0 ? 0.0 : (j == 1 ? 1.0 : (j - 1) * M_PI);
            else
                scale = (j + 1) * M_PI;
            row += std::abs(g.coeff(i, j)) * scale;
        }
        worst = std::max(worst, row);
    }
    return worst;
}

std::vector<double> sample_initial(const std::function<double(double)>& gamma,
                                   const Grid& grid, bool cell_average) {
    std::vector<double> u(size_t(grid.nodes()));
    for (int i = 0; i <= grid.n; ++i) {
        double v;
        if (!cell_average) {
            v = gamma(grid.x(i));
        } else {
            double lo = std::max(0.0, grid.x(i) - 0.5 * grid.dx());
            double hi = std::min(1.0, grid.x(i) + 0.5 * grid.dx());
            const int m = 64;
            double s = 0.0;
            for (int q = 0; q < m; ++q)
                s += gamma(lo + (hi - lo) * (q + 0.5) / m);
            v = s / m;
        }
        if (!(v >= 0.0 && v <= 1.0))
            throw std::invalid_argument("initial profile leaves [0,1] at x=" +
                                        format_double(grid.x(i)));
        u[size_t(i)] = v;
    }
    return u;
}

struct StepPlan {
    long long steps = 0;
    long long record_every = 1;
    double dt = 0.0;
};

StepPlan plan_steps(double T, double dt_req, int max_snapshots) {
    if (!(T > 0.0)) throw std::invalid_argument("horizon must be positive");
    StepPlan p;
    p.steps = llround(std::ceil(T / dt_req * (1.0 - 1e-12)));
    p.steps = std::max<long long>(p.steps, 1);
    long long slots = std::max(1, max_snapshots - 1);
    p.record_every = (p.steps + slots - 1) / slots;
    p.steps = p.record_every * ((p.steps + p.record_every - 1) / p.record_every);
    p.dt = T / double(p.steps);
    return p;
}

void guard_finite(const std::vector<double>& u, double t, const Grid& grid) {
    for (int i = 0; i < int(u.size()); ++i) {
        double v = u[size_t(i)];
        if (!std::isfinite(v) || v < -0.01 || v > 1.01)
            throw std::runtime_error(
                "solver blow-up: rho=" + format_double(v) + " at t=" +
                format_double(t) + ", x=" + format_double(grid.x(i)));
    }
}

// One explicit step of d_t u = -div J with J = -grad u + 2 sigma(u) grad G
// on faces, boundary influxes pinned to the reservoir currents.
void explicit_step(std::vector<double>& u, std::vector<double>& scratch,
                   const Grid& grid, double dt, const SideMoments& mom,
                   PfrakVariant variant, const std::vector<double>* grad_face,
                   double g0, double g1) {
    const int n = grid.n;
    const double dx = grid.dx();
    std::vector<double>& flux = scratch; // faces i+1/2, i = 0..n-1

    for (int i = 0; i < n; ++i) {
        double j = -(u[size_t(i + 1)] - u[size_t(i)]) / dx;
        if (grad_face)
            j += 2.0 * sigma_mobility(0.5 * (u[size_t(i)] + u[size_t(i + 1)])) *
                 (*grad_face)[size_t(i)];
        flux[size_t(i)] = j;
    }

    double in_left = grad_face ? mom.left.pfrak(u[0], g0, variant)
                               : mom.left.F(u[0]);
    double in_right = grad_face ? mom.right.pfrak(u[size_t(n)], g1, variant)
                                : mom.right.F(u[size_t(n)]);

    u[0] += 2.0 * dt / dx * (in_left - flux[0]);
    for (int i = 1; i < n; ++i)
        u[size_t(i)] -= dt / dx * (flux[size_t(i)] - flux[size_t(i - 1)]);
    u[size_t(n)] += 2.0 * dt / dx * (flux[size_t(n - 1)] + in_right);
}

void thomas_solve(std::vector<double>& lower, std::vector<double>& diag,
                  std::vector<double>& upper, std::vector<double>& rhs) {
    size_t n = diag.size();
    for (size_t i = 1; i < n; ++i) {
        double w = lower[i] / diag[i - 1];
        diag[i] -= w * upper[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    rhs[n - 1] /= diag[n - 1];
    for (size_t i = n - 1; i-- > 0;)
        rhs[i] = (rhs[i] - upper[i] * rhs[i + 1]) / diag[i];
}

// Crank-Nicolson step for the untilted equation; the two boundary rows are
// nonlinear in the new value and get a damped Newton solve.
void cn_step(std::vector<double>& u, const Grid& grid, double dt,
             const SideMoments& mom, const Poly& dFl, const Poly& dFr,
             double tol, int max_iters) {
    const int n = grid.n;
    const double dx = grid.dx();
    const double r = dt / (dx * dx);
    const size_t m = size_t(n + 1);

    std::vector<double> rhs(m);
    rhs[0] = u[0] + r * (u[1] - u[0]) + dt / dx * mom.left.F(u[0]);
    for (int i = 1; i < n; ++i)
        rhs[size_t(i)] = u[size_t(i)] +
                         0.5 * r * (u[size_t(i + 1)] - 2.0 * u[size_t(i)] +
                                    u[size_t(i - 1)]);
    rhs[m - 1] = u[m - 1] + r * (u[m - 2] - u[m - 1]) + dt / dx * mom.right.F(u[m - 1]);

    auto residual = [&](const std::vector<double>& v, std::vector<double>& R) {
        R[0] = (1.0 + r) * v[0] - r * v[1] - dt / dx * mom.left.F(v[0]) - rhs[0];
        for (int i = 1; i < n; ++i)
            R[size_t(i)] = (1.0 + r) * v[size_t(i)] -
                           0.5 * r * (v[size_t(i + 1)] + v[size_t(i - 1)]) -
                           rhs[size_t(i)];
        R[m - 1] = (1.0 + r) * v[m - 1] - r * v[m - 2] -
                   dt / dx * mom.right.F(v[m - 1]) - rhs[m - 1];
    };
    auto max_abs = [](const std::vector<double>& v) {
        double s = 0.0;
        for (double x : v) s = std::max(s, std::abs(x));
        return s;
    };

    std::vector<double> v = u, R(m), lower(m), diag(m), upper(m), delta(m);
    residual(v, R);
    double err = max_abs(R);
    for (int it = 0; it < max_iters && err > tol; ++it) {
        std::fill(lower.begin(), lower.end(), -0.5 * r);
        std::fill(diag.begin(), diag.end(), 1.0 + r);
        std::fill(upper.begin(), upper.end(), -0.5 * r);
        upper[0] = -r;
        lower[m - 1] = -r;
        diag[0] -= dt / dx * dFl(v[0]);
        diag[m - 1] -= dt / dx * dFr(v[m - 1]);
        for (size_t i = 0; i < m; ++i) delta[i] = -R[i];
        thomas_solve(lower, diag, upper, delta);

        double step = 1.0;
        std::vector<double> trial(m), Rt(m);
        for (int halvings = 0; halvings < 40; ++halvings) {
            for (size_t i = 0; i < m; ++i) trial[i] = v[i] + step * delta[i];
            residual(trial, Rt);
            if (max_abs(Rt) < err) break;
            step *= 0.5;
        }
        for (size_t i = 0; i < m; ++i) v[i] += step * delta[i];
        residual(v, R);
        err = max_abs(R);
    }
    if (err > tol)
        throw std::runtime_error("boundary Newton failed to converge");
    u = v;
}

} // namespace

DensityField solve_perturbed(const std::function<double(double)>& gamma,
                             const RateModel& model,
                             const std::optional<TestFunction>& G,
                             const Grid& grid, const SolverOptions& opt) {
    const double dx = grid.dx();
    const bool tilted = G.has_value() && !G->zero_everywhere();

    double dt_req = opt.dt;
    if (opt.scheme == TimeScheme::explicit_euler) {
        double stable = 0.4 * dx * dx;
        if (dt_req <= 0.0) dt_req = stable;
        if (dt_req > stable * (1.0 + 1e-9))
            throw std::invalid_argument("dt violates the 0.4 dx^2 stability bound");
        if (tilted) {
            double adv = 0.25 * dx / std::max(1.0, 2.0 * tilt_grad_bound(*G));
            if (dt_req > adv * (1.0 + 1e-9))
                throw std::invalid_argument("dt violates the advection bound");
            dt_req = std::min(dt_req, adv);
        }
    } else {
        if (tilted)
            throw std::invalid_argument("crank_nicolson supports untilted runs only");
        if (dt_req <= 0.0) dt_req = 0.5 * dx;
    }
    if (tilted && G->horizon() < opt.T)
        throw std::invalid_argument("tilt horizon shorter than the run");

    StepPlan plan = plan_steps(opt.T, dt_req, opt.max_snapshots);
    SideMoments mom(model);

    DensityField field(grid, plan.dt * double(plan.record_every), model_hash(model));
    std::vector<double> u = sample_initial(gamma, grid, opt.cell_average);
    field.push_snapshot(u);

    // Static tilts collapse to one face-gradient table up front.
    std::vector<double> grad_face;
    double g0 = 0.0, g1 = 0.0;
    const bool static_tilt = tilted && G->time_constant();
    auto refresh_tilt = [&](double t) {
        auto d = G->collapse_time(t);
        grad_face.resize(size_t(grid.n));
        for (int i = 0; i < grid.n; ++i)
            grad_face[size_t(i)] = G->slice_dx(d, (i + 0.5) * dx);
        g0 = G->slice_value(d, 0.0);
        g1 = G->slice_value(d, 1.0);
    };
    if (static_tilt) refresh_tilt(0.0);

    Poly dFl = mom.left.F_poly().derivative();
    Poly dFr = mom.right.F_poly().derivative();

    std::vector<double> scratch(size_t(grid.n));
    for (long long s = 1; s <= plan.steps; ++s) {
        double t_before = plan.dt * double(s - 1);
        if (opt.scheme == TimeScheme::explicit_euler) {
            if (tilted && !static_tilt) refresh_tilt(t_before);
            explicit_step(u, scratch, grid, plan.dt, mom, opt.variant,
                          tilted ? &grad_face : nullptr, g0, g1);
        } else {
            cn_step(u, grid, plan.dt, mom, dFl, dFr, opt.cn_tol, opt.cn_max_iters);
        }
        if (s % plan.record_every == 0) {
            guard_finite(u, plan.dt * double(s), grid);
            field.push_snapshot(u);
        }
    }
    return field;
}

DensityField solve_hydro(const std::function<double(double)>& gamma,
                         const RateModel& model, const Grid& grid,
                         const SolverOptions& opt) {
    return solve_perturbed(gamma, model, std::nullopt, grid, opt);
}

std::vector<StationaryProfile> stationary_profiles(const RateModel& model,
                                                   int scan_points, double tol) {
    if (scan_points < 100)
        throw std::invalid_argument("stationary scan needs at least 100 points");
    if (!(tol > 0.0)) throw std::invalid_argument("tolerance must be positive");

    SideMoments mom(model);
    auto beta_of = [&](double a) { return a - mom.left.F(a); };
    auto g = [&](double a) {
        double b = beta_of(a);
        return mom.right.F(b) - (b - a);
    };

    std::vector<double> roots;
    double prev_a = 0.0, prev_g = g(0.0);
    if (prev_g == 0.0) roots.push_back(0.0);
    for (int j = 1; j < scan_points; ++j) {
        double a = double(j) / (scan_points - 1);
        double ga = g(a);
        if (ga == 0.0) {
            roots.push_back(a);
        } else if (prev_g != 0.0 && std::signbit(ga) != std::signbit(prev_g)) {
            double lo = prev_a, hi = a, glo = prev_g;
            while (hi - lo > tol) {
                double mid = 0.5 * (lo + hi);
                double gm = g(mid);
                if (gm == 0.0) { lo = hi = mid; break; }
                if (std::signbit(gm) == std::signbit(glo)) {
                    lo = mid;
                    glo = gm;
                } else {
                    hi = mid;
                }
            }
            roots.push_back(0.5 * (lo + hi));
        }
        prev_a = a;
        prev_g = ga;
    }

    std::sort(roots.begin(), roots.end());
    std::vector<StationaryProfile> out;
    for (double a : roots) {
        if (!out.empty() && a - out.back().alpha < 10.0 * tol) continue;
        double b = beta_of(a);
        if (b < -1e-12 || b > 1.0 + 1e-12) continue;
        StationaryProfile p;
        p.alpha = a;
        p.beta = std::clamp(b, 0.0, 1.0);
        p.residual_left = std::abs(-mom.left.F(a) - (p.beta - a));
        p.residual_right = std::abs(mom.right.F(p.beta) - (p.beta - a));
        out.push_back(p);
    }
    return out;
}

std::string stability_name(Stability s) {
    switch (s) {
    case Stability::stable: return "stable";
    case Stability::unstable: return "unstable";
    default: return "marginal";
    }
}

Stability stability_heuristic(const RateModel& model,
                              const StationaryProfile& profile,
                              const Grid& grid, double eps, double T) {
    SolverOptions opt;
    opt.T = T;
    double worst = 0.0;
    for (double sign : {+1.0, -1.0}) {
        auto gamma = [&](double x) {
            return std::clamp(profile(x) + sign * eps, 0.0, 1.0);
        };
        DensityField f = solve_hydro(gamma, model, grid, opt);
        const auto& last = f.snapshot(f.snapshots() - 1);
        for (int i = 0; i <= grid.n; ++i)
            worst = std::max(worst, std::abs(last[size_t(i)] - profile(grid.x(i))));
    }
    if (worst <= 0.5 * eps) return Stability::stable;
    if (worst >= 2.0 * eps) return Stability::unstable;
    return Stability::marginal;
}

std::vector<double> mass_balance_residual(
    const DensityField& field, const RateModel& model,
    const std::optional<TestFunction>& G, PfrakVariant variant) {
    SideMoments mom(model);
    const double dx = field.grid().dx();
    const bool tilted = G.has_value() && !G->zero_everywhere();

    std::vector<double> out(field.snapshots());
    double mass0 = trapezoid(field.snapshot(0), dx);
    double cum = 0.0, prev_flux = 0.0;
    for (size_t k = 0; k < field.snapshots(); ++k) {
        const auto& u = field.snapshot(k);
        double fl, fr;
        if (tilted) {
            auto d = G->collapse_time(field.time(k));
            fl = mom.left.pfrak(u.front(), G->slice_value(d, 0.0), variant);
            fr = mom.right.pfrak(u.back(), G->slice_value(d, 1.0), variant);
        } else {
            fl = mom.left.F(u.front());
            fr = mom.right.F(u.back());
        }
        double flux = fl + fr;
        if (k > 0) cum += 0.5 * (prev_flux + flux) * field.snap_dt();
        prev_flux = flux;
        out[k] = trapezoid(u, dx) - mass0 - cum;
    }
    return out;
}

std::vector<double> mass_balance_residual(const DensityField& field,
                                          const RateModel& model) {
    return mass_balance_residual(field, model, std::nullopt);
}

BoundsReport parabolic_bounds_check(const DensityField& field, double t0,
                                    double tol) {
    BoundsReport rep;
    if (t0 < 0.0) t0 = field.T() / 10.0;

    for (size_t k = 0; k < field.snapshots(); ++k)
        for (int i = 0; i <= field.grid().n; ++i) {
            double v = field.value(k, i);
            if (!(v >= -tol && v <= 1.0 + tol)) {
                rep.pass = false;
                rep.bad_t = field.time(k);
                rep.bad_x = field.grid().x(i);
                rep.message = "value " + format_double(v) + " outside [0,1] at t=" +
                              format_double(rep.bad_t) + ", x=" +
                              format_double(rep.bad_x);
                return rep;
            }
        }

    double lo = 1.0, hi = 0.0;
    for (size_t k = 0; k < field.snapshots(); ++k) {
        if (field.time(k) < t0 && k + 1 != field.snapshots()) continue;
        for (int i = 0; i <= field.grid().n; ++i) {
            lo = std::min(lo, field.value(k, i));
            hi = std::max(hi, field.value(k, i));
        }
    }
    rep.eps = std::min(lo, 1.0 - hi);
    rep.pass = rep.eps > 0.0;
    if (!rep.pass)
        rep.message = "field touches {0,1} after t0=" + format_double(t0);
    return rep;
}

EntropyReport entropy_inequality_check(const DensityField& field,
                                       const RateModel& model, double C0) {
    if (field.min_value() <= 0.0 || field.max_value() >= 1.0)
        throw std::domain_error("entropy integrand needs the field strictly inside (0,1)");

    SideMoments mom(model);
    const Grid& grid = field.grid();
    const double dx = grid.dx();
    const int n = grid.n;

    auto v0_integral = [&](const std::vector<double>& u) {
        std::vector<double> f(u.size());
        for (size_t i = 0; i < u.size(); ++i)
            f[i] = u[i] * std::log(u[i]) + (1.0 - u[i]) * std::log(1.0 - u[i]);
        return trapezoid(f, dx);
    };
    auto dissipation = [&](const std::vector<double>& u) {
        std::vector<double> f(u.size());
        for (int i = 0; i <= n; ++i) {
            double grad;
            if (i == 0)
                grad = (-3.0 * u[0] + 4.0 * u[1] - u[2]) / (2.0 * dx);
            else if (i == n)
                grad = (3.0 * u[size_t(n)] - 4.0 * u[size_t(n - 1)] +
                        u[size_t(n - 2)]) / (2.0 * dx);
            else
                grad = (u[size_t(i + 1)] - u[size_t(i - 1)]) / (2.0 * dx);
            f[size_t(i)] = grad * grad / sigma_mobility(u[size_t(i)]);
        }
        double bulk = trapezoid(f, dx);
        double al = u.front(), ar = u.back();
        double bl = std::abs(mom.left.F(al) * std::log(al / (1.0 - al)));
        double br = std::abs(mom.right.F(ar) * std::log(ar / (1.0 - ar)));
        return bulk + bl + br;
    };

    EntropyReport rep;
    rep.pass = true;
    rep.max_gap = 0.0;
    double v0_gamma = v0_integral(field.snapshot(0));
    double lhs = 0.0, prev = dissipation(field.snapshot(0));
    for (size_t k = 1; k < field.snapshots(); ++k) {
        double cur = dissipation(field.snapshot(k));
        lhs += 0.5 * (prev + cur) * field.snap_dt();
        prev = cur;
        double t = field.time(k);
        double entropy_drop = v0_gamma - v0_integral(field.snapshot(k));
        rep.min_C0 = std::max(rep.min_C0, (lhs - entropy_drop) / t);
        double gap = lhs - (C0 * t + entropy_drop);
        rep.max_gap = std::max(rep.max_gap, gap);
        if (gap > 1e-12) rep.pass = false;
    }
    return rep;
}

} // namespace exc
