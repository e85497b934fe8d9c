#include "exc/path_density.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace exc {

PathDensity::PathDensity(std::vector<std::vector<double>> slices, double dt) {
    if (slices.size() < 3)
        throw std::invalid_argument("path needs at least three time slices");
    if (!(dt > 0.0)) throw std::invalid_argument("path time step must be positive");
    K_ = int(slices.size()) - 1;
    n_ = int(slices.front().size()) - 1;
    if (n_ < 2) throw std::invalid_argument("path needs at least three space nodes");
    dt_ = dt;

    v_.reserve(size_t(K_ + 1) * (n_ + 1));
    margin_ = 0.5;
    for (const auto& row : slices) {
        if (int(row.size()) != n_ + 1)
            throw std::invalid_argument("ragged path slices");
        for (double u : row) {
            if (!(u >= 0.0 && u <= 1.0))
                throw std::invalid_argument("path value outside [0,1]");
            margin_ = std::min(margin_, std::min(u, 1.0 - u));
            v_.push_back(u);
        }
    }
    rows_ = std::move(slices);
    build_derivatives();
}

void PathDensity::build_derivatives() {
    vt_.resize(v_.size());
    vx_.resize(v_.size());
    const double dx = this->dx();
    for (int k = 0; k <= K_; ++k) {
        for (int i = 0; i <= n_; ++i) {
            double t;
            if (k == 0)
                t = (-3.0 * value(0, i) + 4.0 * value(1, i) - value(2, i)) /
                    (2.0 * dt_);
            else if (k == K_)
                t = (3.0 * value(K_, i) - 4.0 * value(K_ - 1, i) +
                     value(K_ - 2, i)) / (2.0 * dt_);
            else
                t = (value(k + 1, i) - value(k - 1, i)) / (2.0 * dt_);
            vt_[idx(k, i)] = t;

            double s;
            if (i == 0)
                s = (-3.0 * value(k, 0) + 4.0 * value(k, 1) - value(k, 2)) /
                    (2.0 * dx);
            else if (i == n_)
                s = (3.0 * value(k, n_) - 4.0 * value(k, n_ - 1) +
                     value(k, n_ - 2)) / (2.0 * dx);
            else
                s = (value(k, i + 1) - value(k, i - 1)) / (2.0 * dx);
            vx_[idx(k, i)] = s;
        }
    }
}

const std::vector<double>& PathDensity::slice(int k) const {
    return rows_.at(size_t(k));
}

PathDensity PathDensity::from_field(const DensityField& field, int target_slices) {
    if (target_slices < 3)
        throw std::invalid_argument("need at least three slices");
    size_t intervals = field.snapshots() - 1;
    if (intervals < 2) throw std::invalid_argument("field too short for a path");

    const size_t K = std::min(size_t(target_slices) - 1, intervals);
    if (intervals % K == 0) {
        // Exact snapshots when an even stride exists.
        const size_t stride = intervals / K;
        std::vector<std::vector<double>> slices;
        for (size_t k = 0; k <= intervals; k += stride)
            slices.push_back(field.snapshot(k));
        return PathDensity(std::move(slices), field.snap_dt() * double(stride));
    }
    // Otherwise resample on a uniform grid of K intervals. Never round the
    // count down to the nearest divisor instead: snapshot counts with few
    // divisors would collapse the path to a handful of slices.
    const double dt = field.snap_dt() * double(intervals) / double(K);
    std::vector<std::vector<double>> slices;
    for (size_t k = 0; k < K; ++k)
        slices.push_back(field.at_time(dt * double(k)));
    slices.push_back(field.snapshot(intervals));
    return PathDensity(std::move(slices), dt);
}

PathDensity PathDensity::from_function(
    const std::function<double(double, double)>& rho, int n, int slices,
    double T) {
    if (slices < 2) throw std::invalid_argument("need at least two time intervals");
    if (!(T > 0.0)) throw std::invalid_argument("horizon must be positive");
    double dt = T / slices;
    std::vector<std::vector<double>> rows;
    for (int k = 0; k <= slices; ++k) {
        std::vector<double> row(size_t(n + 1));
        for (int i = 0; i <= n; ++i) row[size_t(i)] = rho(dt * k, double(i) / n);
        rows.push_back(std::move(row));
    }
    return PathDensity(std::move(rows), dt);
}

} // namespace exc
