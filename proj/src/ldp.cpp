#include "exc/ldp.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Dense>

#include "exc/numeric.hpp"

namespace exc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<double> trap_weights(int nodes, double h) {
    std::vector<double> w(size_t(nodes), h);
    w.front() = 0.5 * h;
    w.back() = 0.5 * h;
    return w;
}

void require_interior(const PathDensity& path, const char* who) {
    if (!(path.interior_margin() > 0.0))
        throw std::domain_error(std::string(who) +
                                ": path must stay strictly inside (0,1)");
}

void require_horizon(const PathDensity& path, const TestFunction& H) {
    if (H.horizon() < path.T() * (1.0 - 1e-12))
        throw std::invalid_argument(
            "test function horizon is shorter than the path");
}

std::vector<double> gamma_nodes(const PathDensity& path,
                                const std::function<double(double)>& gamma) {
    std::vector<double> g(size_t(path.n()) + 1);
    for (int i = 0; i <= path.n(); ++i) g[size_t(i)] = gamma(path.x(i));
    double dev = 0.0;
    for (int i = 0; i <= path.n(); ++i)
        dev = std::max(dev, std::abs(g[size_t(i)] - path.value(0, i)));
    if (dev > 1e-8)
        throw std::invalid_argument(
            "initial profile disagrees with the path at t = 0");
    return g;
}

// Per-slice resistance row q = 1/sigma, its cumulative trapezoid Xi
// normalized to [0,1], and zeta = 1/<1/sigma>.
struct SliceResistance {
    std::vector<double> q;
    std::vector<double> xi;
    double zeta = 0.0;
};

SliceResistance slice_resistance(const PathDensity& path, int k) {
    const int n = path.n();
    SliceResistance r;
    r.q.resize(size_t(n) + 1);
    r.xi.assign(size_t(n) + 1, 0.0);
    for (int i = 0; i <= n; ++i)
        r.q[size_t(i)] = 1.0 / sigma_mobility(path.value(k, i));
    const double dx = path.dx();
    for (int i = 1; i <= n; ++i)
        r.xi[size_t(i)] =
            r.xi[size_t(i) - 1] +
            0.5 * dx * (r.q[size_t(i) - 1] + r.q[size_t(i)]);
    const double total = r.xi.back();
    r.zeta = 1.0 / total;
    for (double& v : r.xi) v /= total;
    return r;
}

void charges_at(const PathDensity& path, int k, double& a, double& b) {
    const SliceResistance r = slice_resistance(path, k);
    const int n = path.n();
    const std::vector<double> wx = trap_weights(n + 1, path.dx());
    NeumaierSum sa, sb;
    for (int i = 0; i <= n; ++i) {
        const double w = wx[size_t(i)];
        const double td = path.dt_rho(k, i);
        // grad Xi = zeta * q, analytic rather than differenced
        const double cross = path.dx_rho(k, i) * r.zeta * r.q[size_t(i)];
        sa.add(w * (td * (1.0 - r.xi[size_t(i)]) - cross));
        sb.add(w * (td * r.xi[size_t(i)] + cross));
    }
    a = sa.value();
    b = sb.value();
}

// Shared tabulation of one space-time basis on the path grid.
struct BasisTables {
    int p = 0, J = 0, K = 0, n = 0;
    std::vector<std::vector<double>> phi, dphi; // [time node][i]
    std::vector<std::vector<double>> psi, dpsi; // [j][space node]
    std::vector<double> psi0, psi1;             // space basis at x = 0, 1
    std::vector<double> wt, wx;
};

BasisTables tabulate(const TestFunction& basis, const PathDensity& path) {
    BasisTables tb;
    tb.p = basis.time_degree();
    tb.J = basis.space_count();
    tb.K = path.slices();
    tb.n = path.n();
    tb.wt = trap_weights(tb.K + 1, path.dt());
    tb.wx = trap_weights(tb.n + 1, path.dx());
    tb.phi.resize(size_t(tb.K) + 1);
    tb.dphi.resize(size_t(tb.K) + 1);
    for (int k = 0; k <= tb.K; ++k) {
        const double t = path.time(k);
        tb.phi[size_t(k)].resize(size_t(tb.p) + 1);
        tb.dphi[size_t(k)].resize(size_t(tb.p) + 1);
        for (int i = 0; i <= tb.p; ++i) {
            tb.phi[size_t(k)][size_t(i)] = basis.time_basis(i, t);
            tb.dphi[size_t(k)][size_t(i)] = basis.time_basis_dt(i, t);
        }
    }
    tb.psi.resize(size_t(tb.J));
    tb.dpsi.resize(size_t(tb.J));
    tb.psi0.resize(size_t(tb.J));
    tb.psi1.resize(size_t(tb.J));
    for (int j = 0; j < tb.J; ++j) {
        tb.psi[size_t(j)].resize(size_t(tb.n) + 1);
        tb.dpsi[size_t(j)].resize(size_t(tb.n) + 1);
        for (int i = 0; i <= tb.n; ++i) {
            tb.psi[size_t(j)][size_t(i)] = basis.space_basis(j, path.x(i));
            tb.dpsi[size_t(j)][size_t(i)] =
                basis.space_basis_dx(j, path.x(i));
        }
        tb.psi0[size_t(j)] = basis.space_basis(j, 0.0);
        tb.psi1[size_t(j)] = basis.space_basis(j, 1.0);
    }
    return tb;
}

// Quadratic data of J restricted to a coefficient basis:
//   J(c) = L . c - c^T A c - sum_k wt_k [bfrak^-(h0_k) + bfrak^+(h1_k)]
// with h0_k = <v0_k, c>, h1_k = <v1_k, c>. The boundary term is dropped for
// the zero-boundary flavor where v0 = v1 = 0.
struct JQuadratic {
    Eigen::VectorXd L;
    Eigen::MatrixXd A;
};

size_t cidx(const BasisTables& tb, int i, int j) {
    return size_t(i) * size_t(tb.J) + size_t(j);
}

JQuadratic assemble_J(const BasisTables& tb, const PathDensity& path,
                      const std::vector<double>& g) {
    const int D = (tb.p + 1) * tb.J;
    JQuadratic q;
    q.L = Eigen::VectorXd::Zero(D);
    q.A = Eigen::MatrixXd::Zero(D, D);

    // space moments of the path against each basis function
    for (int i = 0; i <= tb.p; ++i) {
        for (int j = 0; j < tb.J; ++j) {
            NeumaierSum acc;
            // terminal and initial pairings
            NeumaierSum endT, end0;
            for (int x = 0; x <= tb.n; ++x) {
                endT.add(tb.wx[size_t(x)] * path.value(tb.K, x) *
                         tb.psi[size_t(j)][size_t(x)]);
                end0.add(tb.wx[size_t(x)] * g[size_t(x)] *
                         tb.psi[size_t(j)][size_t(x)]);
            }
            acc.add(tb.phi[size_t(tb.K)][size_t(i)] * endT.value());
            acc.add(-tb.phi[0][size_t(i)] * end0.value());
            for (int k = 0; k <= tb.K; ++k) {
                NeumaierSum rho_psi, drho_dpsi;
                for (int x = 0; x <= tb.n; ++x) {
                    rho_psi.add(tb.wx[size_t(x)] * path.value(k, x) *
                                tb.psi[size_t(j)][size_t(x)]);
                    drho_dpsi.add(tb.wx[size_t(x)] * path.dx_rho(k, x) *
                                  tb.dpsi[size_t(j)][size_t(x)]);
                }
                acc.add(tb.wt[size_t(k)] *
                        (-tb.dphi[size_t(k)][size_t(i)] * rho_psi.value() +
                         tb.phi[size_t(k)][size_t(i)] * drho_dpsi.value()));
            }
            q.L[long(cidx(tb, i, j))] = acc.value();
        }
    }

    // c^T A c = int int sigma(rho) (grad H)^2, assembled per time slice
    Eigen::MatrixXd S(tb.J, tb.J);
    for (int k = 0; k <= tb.K; ++k) {
        S.setZero();
        for (int j = 0; j < tb.J; ++j)
            for (int l = j; l < tb.J; ++l) {
                NeumaierSum s;
                for (int x = 0; x <= tb.n; ++x)
                    s.add(tb.wx[size_t(x)] *
                          sigma_mobility(path.value(k, x)) *
                          tb.dpsi[size_t(j)][size_t(x)] *
                          tb.dpsi[size_t(l)][size_t(x)]);
                S(j, l) = s.value();
                S(l, j) = s.value();
            }
        for (int i = 0; i <= tb.p; ++i)
            for (int i2 = 0; i2 <= tb.p; ++i2) {
                const double w = tb.wt[size_t(k)] *
                                 tb.phi[size_t(k)][size_t(i)] *
                                 tb.phi[size_t(k)][size_t(i2)];
                if (w == 0.0) continue;
                for (int j = 0; j < tb.J; ++j)
                    for (int l = 0; l < tb.J; ++l)
                        q.A(long(cidx(tb, i, j)), long(cidx(tb, i2, l))) +=
                            w * S(j, l);
            }
    }
    return q;
}

// Boundary slice values of H for a coefficient vector.
void boundary_traces(const BasisTables& tb, const Eigen::VectorXd& c, int k,
                     double& h0, double& h1) {
    h0 = 0.0;
    h1 = 0.0;
    for (int i = 0; i <= tb.p; ++i) {
        double r0 = 0.0, r1 = 0.0;
        for (int j = 0; j < tb.J; ++j) {
            const double cc = c[long(cidx(tb, i, j))];
            r0 += cc * tb.psi0[size_t(j)];
            r1 += cc * tb.psi1[size_t(j)];
        }
        h0 += tb.phi[size_t(k)][size_t(i)] * r0;
        h1 += tb.phi[size_t(k)][size_t(i)] * r1;
    }
}

TestFunction coefficients_to_function(const TestFunction& proto,
                                      const BasisTables& tb,
                                      const Eigen::VectorXd& c) {
    TestFunction H = proto;
    for (int i = 0; i <= tb.p; ++i)
        for (int j = 0; j < tb.J; ++j)
            H.set_coeff(i, j, c[long(cidx(tb, i, j))]);
    return H;
}

} // namespace

double eval_J(const PathDensity& path, const TestFunction& H,
              const RateModel& model,
              const std::function<double(double)>& gamma) {
    require_interior(path, "eval_J");
    require_horizon(path, H);
    const std::vector<double> g = gamma_nodes(path, gamma);
    const SideMoments mom(model);

    const int n = path.n();
    const int K = path.slices();
    const std::vector<double> wt = trap_weights(K + 1, path.dt());
    const std::vector<double> wx = trap_weights(n + 1, path.dx());

    NeumaierSum total;
    {
        const std::vector<double> dT = H.collapse_time(path.T());
        const std::vector<double> d0 = H.collapse_time(0.0);
        NeumaierSum endT, end0;
        for (int i = 0; i <= n; ++i) {
            endT.add(wx[size_t(i)] * path.value(K, i) *
                     H.slice_value(dT, path.x(i)));
            end0.add(wx[size_t(i)] * g[size_t(i)] *
                     H.slice_value(d0, path.x(i)));
        }
        total.add(endT.value());
        total.add(-end0.value());
    }
    for (int k = 0; k <= K; ++k) {
        const double t = path.time(k);
        const std::vector<double> d = H.collapse_time(t);
        const std::vector<double> ddt = H.collapse_time_dt(t);
        NeumaierSum space;
        for (int i = 0; i <= n; ++i) {
            const double x = path.x(i);
            const double gH = H.slice_dx(d, x);
            space.add(wx[size_t(i)] *
                      (-path.value(k, i) * H.slice_value(ddt, x) +
                       path.dx_rho(k, i) * gH -
                       sigma_mobility(path.value(k, i)) * gH * gH));
        }
        const double h0 = H.slice_value(d, 0.0);
        const double h1 = H.slice_value(d, 1.0);
        total.add(wt[size_t(k)] *
                  (space.value() - mom.left.bfrak(path.value(k, 0), h0) -
                   mom.right.bfrak(path.value(k, n), h1)));
    }
    return total.value();
}

namespace {

EvalResult eval_I_impl(const PathDensity& path, const RateModel& model,
                       const std::vector<double>& g, const LdpOptions& opt) {
    require_interior(path, "eval_I");
    const TestFunction proto(BasisFlavor::free_boundary, opt.p, opt.J,
                             path.T());
    const BasisTables tb = tabulate(proto, path);
    const JQuadratic q = assemble_J(tb, path, g);
    const SideMoments mom(model);
    const int D = (tb.p + 1) * tb.J;
    const int K = tb.K;

    std::vector<double> rho0(size_t(K) + 1), rho1(size_t(K) + 1);
    for (int k = 0; k <= K; ++k) {
        rho0[size_t(k)] = path.value(k, 0);
        rho1[size_t(k)] = path.value(k, tb.n);
    }

    auto value = [&](const Eigen::VectorXd& c) -> double {
        double v = q.L.dot(c) - c.dot(q.A * c);
        try {
            NeumaierSum bnd;
            for (int k = 0; k <= K; ++k) {
                double h0, h1;
                boundary_traces(tb, c, k, h0, h1);
                bnd.add(tb.wt[size_t(k)] *
                        (mom.left.bfrak(rho0[size_t(k)], h0) +
                         mom.right.bfrak(rho1[size_t(k)], h1)));
            }
            v -= bnd.value();
        } catch (const std::domain_error&) {
            return -kInf; // tilt exponent cap: reject the trial point
        }
        return v;
    };
    auto grad_hess = [&](const Eigen::VectorXd& c, Eigen::VectorXd& grad,
                         Eigen::MatrixXd& hess) {
        grad = q.L - 2.0 * (q.A * c);
        hess = -2.0 * q.A;
        // boundary contributions collapse onto the time basis
        Eigen::VectorXd g0 = Eigen::VectorXd::Zero(tb.p + 1);
        Eigen::VectorXd g1 = Eigen::VectorXd::Zero(tb.p + 1);
        Eigen::MatrixXd w0 = Eigen::MatrixXd::Zero(tb.p + 1, tb.p + 1);
        Eigen::MatrixXd w1 = Eigen::MatrixXd::Zero(tb.p + 1, tb.p + 1);
        for (int k = 0; k <= K; ++k) {
            double h0, h1;
            boundary_traces(tb, c, k, h0, h1);
            const double wtk = tb.wt[size_t(k)];
            const double d0 = mom.left.bfrak_dM(rho0[size_t(k)], h0);
            const double d1 = mom.right.bfrak_dM(rho1[size_t(k)], h1);
            const double s0 = mom.left.bfrak_d2M(rho0[size_t(k)], h0);
            const double s1 = mom.right.bfrak_d2M(rho1[size_t(k)], h1);
            for (int i = 0; i <= tb.p; ++i) {
                const double pk = tb.phi[size_t(k)][size_t(i)];
                g0[i] += wtk * d0 * pk;
                g1[i] += wtk * d1 * pk;
                for (int i2 = 0; i2 <= tb.p; ++i2) {
                    const double pp = pk * tb.phi[size_t(k)][size_t(i2)];
                    w0(i, i2) += wtk * s0 * pp;
                    w1(i, i2) += wtk * s1 * pp;
                }
            }
        }
        for (int i = 0; i <= tb.p; ++i)
            for (int j = 0; j < tb.J; ++j) {
                const long c1 = long(cidx(tb, i, j));
                grad[c1] -= g0[i] * tb.psi0[size_t(j)] +
                            g1[i] * tb.psi1[size_t(j)];
                for (int i2 = 0; i2 <= tb.p; ++i2)
                    for (int l = 0; l < tb.J; ++l) {
                        const long c2 = long(cidx(tb, i2, l));
                        hess(c1, c2) -=
                            w0(i, i2) * tb.psi0[size_t(j)] *
                                tb.psi0[size_t(l)] +
                            w1(i, i2) * tb.psi1[size_t(j)] *
                                tb.psi1[size_t(l)];
                    }
            }
    };

    const NewtonResult res = maximize_concave(
        value, grad_hess, Eigen::VectorXd::Zero(D), opt.newton);
    if (!res.converged)
        throw std::runtime_error(
            "eval_I: Newton ascent did not reach the gradient tolerance");
    EvalResult out{res.value, coefficients_to_function(proto, tb, res.x),
                   res.iterations, res.grad_norm};
    return out;
}

} // namespace

EvalResult eval_I(const PathDensity& path, const RateModel& model,
                  const std::function<double(double)>& gamma,
                  const LdpOptions& opt) {
    return eval_I_impl(path, model, gamma_nodes(path, gamma), opt);
}

EvalResult eval_I(const PathDensity& path, const RateModel& model,
                  const LdpOptions& opt) {
    return eval_I_impl(path, model, path.slice(0), opt);
}

EvalResult eval_Q(const PathDensity& path, const LdpOptions& opt) {
    const TestFunction proto(BasisFlavor::zero_boundary, opt.p, opt.J,
                             path.T());
    const BasisTables tb = tabulate(proto, path);
    const int D = (tb.p + 1) * tb.J;

    Eigen::VectorXd L = Eigen::VectorXd::Zero(D);
    for (int i = 0; i <= tb.p; ++i)
        for (int j = 0; j < tb.J; ++j) {
            NeumaierSum acc;
            for (int k = 0; k <= tb.K; ++k) {
                NeumaierSum space;
                for (int x = 0; x <= tb.n; ++x)
                    space.add(tb.wx[size_t(x)] * path.value(k, x) *
                              tb.dpsi[size_t(j)][size_t(x)]);
                acc.add(tb.wt[size_t(k)] * tb.phi[size_t(k)][size_t(i)] *
                        space.value());
            }
            L[long(cidx(tb, i, j))] = acc.value();
        }

    // (1/2) int int sigma H^2: same slice structure as assemble_J but with
    // the undifferentiated space basis
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(D, D);
    Eigen::MatrixXd S(tb.J, tb.J);
    for (int k = 0; k <= tb.K; ++k) {
        S.setZero();
        for (int j = 0; j < tb.J; ++j)
            for (int l = j; l < tb.J; ++l) {
                NeumaierSum s;
                for (int x = 0; x <= tb.n; ++x)
                    s.add(tb.wx[size_t(x)] *
                          sigma_mobility(path.value(k, x)) *
                          tb.psi[size_t(j)][size_t(x)] *
                          tb.psi[size_t(l)][size_t(x)]);
                S(j, l) = s.value();
                S(l, j) = s.value();
            }
        for (int i = 0; i <= tb.p; ++i)
            for (int i2 = 0; i2 <= tb.p; ++i2) {
                const double w = tb.wt[size_t(k)] *
                                 tb.phi[size_t(k)][size_t(i)] *
                                 tb.phi[size_t(k)][size_t(i2)];
                if (w == 0.0) continue;
                for (int j = 0; j < tb.J; ++j)
                    for (int l = 0; l < tb.J; ++l)
                        B(long(cidx(tb, i, j)), long(cidx(tb, i2, l))) +=
                            w * S(j, l);
            }
    }

    auto value = [&](const Eigen::VectorXd& c) {
        return L.dot(c) - 0.5 * c.dot(B * c);
    };
    auto grad_hess = [&](const Eigen::VectorXd& c, Eigen::VectorXd& grad,
                         Eigen::MatrixXd& hess) {
        grad = L - B * c;
        hess = -B;
    };
    const NewtonResult res = maximize_concave(
        value, grad_hess, Eigen::VectorXd::Zero(D), opt.newton);
    if (!res.converged)
        throw std::runtime_error(
            "eval_Q: Newton ascent did not reach the gradient tolerance");
    return {res.value, coefficients_to_function(proto, tb, res.x),
            res.iterations, res.grad_norm};
}

double closed_form_Q(const PathDensity& path) {
    require_interior(path, "closed_form_Q");
    const std::vector<double> wt = trap_weights(path.slices() + 1, path.dt());
    const std::vector<double> wx = trap_weights(path.n() + 1, path.dx());
    NeumaierSum acc;
    for (int k = 0; k <= path.slices(); ++k) {
        NeumaierSum space;
        for (int i = 0; i <= path.n(); ++i) {
            const double d = path.dx_rho(k, i);
            space.add(wx[size_t(i)] * d * d /
                      sigma_mobility(path.value(k, i)));
        }
        acc.add(wt[size_t(k)] * space.value());
    }
    return 0.5 * acc.value();
}

std::vector<std::vector<double>> xi_field(const PathDensity& path) {
    require_interior(path, "xi_field");
    std::vector<std::vector<double>> out(size_t(path.slices()) + 1);
    for (int k = 0; k <= path.slices(); ++k)
        out[size_t(k)] = slice_resistance(path, k).xi;
    return out;
}

BoundaryCharges boundary_charges(const PathDensity& path) {
    require_interior(path, "boundary_charges");
    BoundaryCharges ch;
    ch.a.resize(size_t(path.slices()) + 1);
    ch.b.resize(size_t(path.slices()) + 1);
    for (int k = 0; k <= path.slices(); ++k)
        charges_at(path, k, ch.a[size_t(k)], ch.b[size_t(k)]);
    return ch;
}

double zeta(const PathDensity& path, int slice) {
    require_interior(path, "zeta");
    if (slice < 0 || slice > path.slices())
        throw std::out_of_range("zeta: slice index out of range");
    return slice_resistance(path, slice).zeta;
}

double upsilon(const SideMoments& mom, double rho0, double rho1, double zeta,
               double x, double y) {
    return zeta * (x - y) * (x - y) + mom.left.bfrak(rho0, x) +
           mom.right.bfrak(rho1, y);
}

double upsilon(const RateModel& model, double rho0, double rho1, double zeta,
               double x, double y) {
    return upsilon(SideMoments(model), rho0, rho1, zeta, x, y);
}

namespace {

// f(x,y) = a x + b y - Upsilon grows along the diagonal direction u = v
// whenever the matching creation or destruction channels are absent on both
// sides; off-diagonal directions are always crushed by zeta (x-y)^2 when
// zeta > 0. With zeta = 0 the two coordinates decouple and each axis is
// checked on its own.
bool phi_unbounded(const SideMoments& mom, double rho0, double rho1,
                   double zeta, double a, double b) {
    const auto total_up = [](const BoundaryMoments& m, double al) {
        return m.B(al) > 0.0;
    };
    const auto total_dn = [](const BoundaryMoments& m, double al) {
        return m.D(al) > 0.0;
    };
    const bool upL = total_up(mom.left, rho0);
    const bool upR = total_up(mom.right, rho1);
    const bool dnL = total_dn(mom.left, rho0);
    const bool dnR = total_dn(mom.right, rho1);
    if (zeta > 0.0)
        return (a + b > 0.0 && !upL && !upR) || (a + b < 0.0 && !dnL && !dnR);
    return (a > 0.0 && !upL) || (a < 0.0 && !dnL) || (b > 0.0 && !upR) ||
           (b < 0.0 && !dnR);
}

} // namespace

PhiResult phi_legendre(const SideMoments& mom, double rho0, double rho1,
                       double zeta, double a, double b,
                       const NewtonOptions& opt) {
    if (zeta < 0.0) throw std::invalid_argument("phi_legendre: zeta < 0");
    PhiResult out;
    if (phi_unbounded(mom, rho0, rho1, zeta, a, b)) {
        out.value = kInf;
        out.unbounded = true;
        return out;
    }

    auto value = [&](const Eigen::VectorXd& v) -> double {
        try {
            return a * v[0] + b * v[1] -
                   upsilon(mom, rho0, rho1, zeta, v[0], v[1]);
        } catch (const std::domain_error&) {
            return -kInf;
        }
    };
    auto grad_hess = [&](const Eigen::VectorXd& v, Eigen::VectorXd& grad,
                         Eigen::MatrixXd& hess) {
        const double x = v[0], y = v[1];
        grad.resize(2);
        hess.resize(2, 2);
        grad[0] = a - 2.0 * zeta * (x - y) - mom.left.bfrak_dM(rho0, x);
        grad[1] = b + 2.0 * zeta * (x - y) - mom.right.bfrak_dM(rho1, y);
        hess(0, 0) = -2.0 * zeta - mom.left.bfrak_d2M(rho0, x);
        hess(1, 1) = -2.0 * zeta - mom.right.bfrak_d2M(rho1, y);
        hess(0, 1) = 2.0 * zeta;
        hess(1, 0) = 2.0 * zeta;
    };

    NewtonResult res =
        maximize_concave(value, grad_hess, Eigen::VectorXd::Zero(2), opt);
    if (!res.converged) {
        // coarse scan, then polish from the best cell
        Eigen::VectorXd best = res.x;
        double best_v = res.value;
        constexpr int m = 161;
        for (int ix = 0; ix < m; ++ix)
            for (int iy = 0; iy < m; ++iy) {
                Eigen::VectorXd v(2);
                v << -8.0 + 16.0 * ix / (m - 1), -8.0 + 16.0 * iy / (m - 1);
                const double fv = value(v);
                if (fv > best_v) {
                    best_v = fv;
                    best = v;
                }
            }
        const NewtonResult polish =
            maximize_concave(value, grad_hess, best, opt);
        res.iterations += polish.iterations;
        if (polish.value >= best_v) {
            res.x = polish.x;
            res.value = polish.value;
        } else {
            res.x = best;
            res.value = best_v;
        }
    }
    out.value = res.value;
    out.x = res.x[0];
    out.y = res.x[1];
    out.iterations = res.iterations;
    return out;
}

PhiResult phi_legendre(const RateModel& model, double rho0, double rho1,
                       double zeta, double a, double b,
                       const NewtonOptions& opt) {
    return phi_legendre(SideMoments(model), rho0, rho1, zeta, a, b, opt);
}

nlohmann::json DecompositionReport::to_json() const {
    return nlohmann::json{{"I", I},
                          {"I1", I1},
                          {"I2", I2},
                          {"a", a},
                          {"b", b},
                          {"zeta", zeta},
                          {"x_star", x_star},
                          {"y_star", y_star},
                          {"iterations", {{"I", i_iterations},
                                          {"I1", i1_iterations}}},
                          {"grad_norms", {{"I", i_grad_norm},
                                          {"I1", i1_grad_norm}}},
                          {"any_phi_unbounded", any_phi_unbounded}};
}

DecompositionReport decompose_I(const PathDensity& path,
                                const RateModel& model,
                                const LdpOptions& opt) {
    require_interior(path, "decompose_I");
    DecompositionReport rep;

    const EvalResult full = eval_I(path, model, opt);
    rep.I = full.value;
    rep.i_iterations = full.iterations;
    rep.i_grad_norm = full.grad_norm;

    // bulk part: same functional, zero-boundary test functions, so the
    // terminal, initial and reservoir terms all vanish and integration by
    // parts leaves <dt rho, H> in place of the endpoint pairings
    {
        const TestFunction proto(BasisFlavor::zero_boundary, opt.p, opt.J,
                                 path.T());
        const BasisTables tb = tabulate(proto, path);
        const int D = (tb.p + 1) * tb.J;
        Eigen::VectorXd L = Eigen::VectorXd::Zero(D);
        for (int i = 0; i <= tb.p; ++i)
            for (int j = 0; j < tb.J; ++j) {
                NeumaierSum acc;
                for (int k = 0; k <= tb.K; ++k) {
                    NeumaierSum space;
                    for (int x = 0; x <= tb.n; ++x)
                        space.add(tb.wx[size_t(x)] *
                                  (path.dt_rho(k, x) *
                                       tb.psi[size_t(j)][size_t(x)] +
                                   path.dx_rho(k, x) *
                                       tb.dpsi[size_t(j)][size_t(x)]));
                    acc.add(tb.wt[size_t(k)] *
                            tb.phi[size_t(k)][size_t(i)] * space.value());
                }
                L[long(cidx(tb, i, j))] = acc.value();
            }
        const JQuadratic q = assemble_J(tb, path, path.slice(0));
        auto value = [&](const Eigen::VectorXd& c) {
            return L.dot(c) - c.dot(q.A * c);
        };
        auto grad_hess = [&](const Eigen::VectorXd& c, Eigen::VectorXd& grad,
                             Eigen::MatrixXd& hess) {
            grad = L - 2.0 * (q.A * c);
            hess = -2.0 * q.A;
        };
        const NewtonResult res = maximize_concave(
            value, grad_hess, Eigen::VectorXd::Zero(D), opt.newton);
        if (!res.converged)
            throw std::runtime_error(
                "decompose_I: bulk Newton ascent did not converge");
        rep.I1 = res.value;
        rep.i1_iterations = res.iterations;
        rep.i1_grad_norm = res.grad_norm;
    }

    // boundary part: int Phi_t(a(t), b(t)) dt
    const SideMoments mom(model);
    const int K = path.slices();
    const std::vector<double> wt = trap_weights(K + 1, path.dt());
    rep.a.resize(size_t(K) + 1);
    rep.b.resize(size_t(K) + 1);
    rep.zeta.resize(size_t(K) + 1);
    rep.x_star.resize(size_t(K) + 1);
    rep.y_star.resize(size_t(K) + 1);
    NeumaierSum i2;
    for (int k = 0; k <= K; ++k) {
        charges_at(path, k, rep.a[size_t(k)], rep.b[size_t(k)]);
        rep.zeta[size_t(k)] = slice_resistance(path, k).zeta;
        const PhiResult phi = phi_legendre(
            mom, path.value(k, 0), path.value(k, path.n()),
            rep.zeta[size_t(k)], rep.a[size_t(k)], rep.b[size_t(k)],
            opt.newton);
        if (phi.unbounded) rep.any_phi_unbounded = true;
        rep.x_star[size_t(k)] = phi.x;
        rep.y_star[size_t(k)] = phi.y;
        i2.add(wt[size_t(k)] * phi.value);
    }
    rep.I2 = rep.any_phi_unbounded ? kInf : i2.value();
    return rep;
}

} // namespace exc
