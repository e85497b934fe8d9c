#pragma once

#include <functional>
#include <vector>

#include "exc/grid.hpp"

namespace exc {

// Gridded space-time density with cached first derivatives, the common
// input of the rate-functional machinery. Paths must take values in [0,1];
// operations that divide by sigma(rho) additionally demand a strictly
// positive interior margin.
class PathDensity {
public:
    static PathDensity from_field(const DensityField& field,
                                  int target_slices = 401);
    static PathDensity from_function(
        const std::function<double(double, double)>& rho, int n, int slices,
        double T);

    int n() const { return n_; }
    int slices() const { return K_; } // time intervals; K_+1 stored slices
    double dx() const { return 1.0 / n_; }
    double dt() const { return dt_; }
    double T() const { return dt_ * K_; }
    double x(int i) const { return double(i) / n_; }
    double time(int k) const { return dt_ * k; }

    double value(int k, int i) const { return v_[idx(k, i)]; }
    double dt_rho(int k, int i) const { return vt_[idx(k, i)]; }
    double dx_rho(int k, int i) const { return vx_[idx(k, i)]; }

    const std::vector<double>& slice(int k) const;

    // min over the grid of min(rho, 1 - rho); > 0 means interior.
    double interior_margin() const { return margin_; }

private:
    PathDensity(std::vector<std::vector<double>> slices, double dt);
    size_t idx(int k, int i) const { return size_t(k) * (n_ + 1) + i; }
    void build_derivatives();

    int n_ = 0, K_ = 0;
    double dt_ = 0.0;
    double margin_ = 0.0;
    std::vector<double> v_, vt_, vx_;
    std::vector<std::vector<double>> rows_;
};

} // namespace exc
