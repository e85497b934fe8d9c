#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace exc {

// Uniform node grid on [0,1]: x_i = i/n for i = 0..n.
struct Grid {
    explicit Grid(int n_);

    int n;
    double dx() const { return 1.0 / n; }
    int nodes() const { return n + 1; }
    double x(int i) const { return double(i) / n; }
};

// Space-time density on a Grid: snapshots at uniformly spaced times
// 0 = t_0 < t_1 < ... < t_K = T (the solver usually thins its steps, so the
// snapshot spacing is a multiple of the integration step).
class DensityField {
public:
    DensityField(Grid grid, double snap_dt, uint64_t model_hash);

    const Grid& grid() const { return grid_; }
    double snap_dt() const { return snap_dt_; }
    uint64_t model_hash() const { return model_hash_; }

    size_t snapshots() const { return snaps_.size(); }
    double T() const { return snap_dt_ * double(snaps_.size() - 1); }
    double time(size_t k) const { return snap_dt_ * double(k); }

    const std::vector<double>& snapshot(size_t k) const { return snaps_[k]; }
    double value(size_t k, int i) const { return snaps_[k][size_t(i)]; }

    void push_snapshot(std::vector<double> v);

    // Linear interpolation in time; t is clamped to [0, T].
    std::vector<double> at_time(double t) const;

    double min_value() const;
    double max_value() const;

private:
    Grid grid_;
    double snap_dt_;
    uint64_t model_hash_;
    std::vector<std::vector<double>> snaps_;
};

// (t, x, rho) rows, one line per node per snapshot.
void save_field_csv(const DensityField& field, std::ostream& out);

// One JSON header line (n, snap_dt, snapshots, model_hash) followed by the
// raw row-major doubles.
void save_field_binary(const DensityField& field, const std::string& path);
DensityField load_field_binary(const std::string& path);

} // namespace exc
