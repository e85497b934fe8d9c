#include "exc/newton.hpp"

#include <cmath>

namespace exc {

NewtonResult maximize_concave(
    const std::function<double(const Eigen::VectorXd&)>& value,
    const std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&,
                             Eigen::MatrixXd&)>& grad_hess,
    Eigen::VectorXd x0, const NewtonOptions& opt) {
    NewtonResult res;
    res.x = std::move(x0);
    res.value = value(res.x);

    const auto dim = res.x.size();
    Eigen::VectorXd g(dim);
    Eigen::MatrixXd H(dim, dim);

    for (res.iterations = 0; res.iterations < opt.max_iters; ++res.iterations) {
        grad_hess(res.x, g, H);
        res.grad_norm = g.lpNorm<Eigen::Infinity>();
        if (res.grad_norm <= opt.grad_tol) {
            res.converged = true;
            return res;
        }

        Eigen::MatrixXd A = -H;
        A.diagonal().array() += opt.ridge;
        Eigen::VectorXd step = A.ldlt().solve(g);
        if (!step.allFinite()) step = g; // fall back to plain ascent

        double s = 1.0;
        bool improved = false;
        for (int halvings = 0; halvings < 60; ++halvings) {
            double trial = value(res.x + s * step);
            if (std::isfinite(trial) && trial > res.value) {
                res.x += s * step;
                res.value = trial;
                improved = true;
                break;
            }
            s *= 0.5;
        }
        if (!improved) {
            // Flat to machine precision along the Newton direction; treat a
            // tiny gradient as converged, otherwise report failure.
            res.converged = res.grad_norm <= 1e3 * opt.grad_tol;
            return res;
        }
    }
    grad_hess(res.x, g, H);
    res.grad_norm = g.lpNorm<Eigen::Infinity>();
    res.converged = res.grad_norm <= opt.grad_tol;
    return res;
}

} // namespace exc
