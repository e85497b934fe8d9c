#pragma once

#include <functional>

#include <Eigen/Dense>

namespace exc {

struct NewtonOptions {
    int max_iters = 200;
    double grad_tol = 1e-9;
    double ridge = 1e-10;
};

struct NewtonResult {
    Eigen::VectorXd x;
    double value = 0.0;
    double grad_norm = 0.0;
    int iterations = 0;
    bool converged = false;
};

// Damped Newton ascent of a concave objective: solve (-Hess + ridge) step =
// grad, backtrack by halving until the value improves. grad_hess fills the
// gradient and Hessian at x.
NewtonResult maximize_concave(
    const std::function<double(const Eigen::VectorXd&)>& value,
    const std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&,
                             Eigen::MatrixXd&)>& grad_hess,
    Eigen::VectorXd x0, const NewtonOptions& opt = {});

} // namespace exc
