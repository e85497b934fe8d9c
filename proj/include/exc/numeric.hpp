#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <span>
#include <string>
#include <vector>

namespace exc {

// Neumaier-compensated accumulator. Used everywhere a sum must not depend on
// how the work was chunked (replica reductions, long time integrals).
class NeumaierSum {
public:
    void add(double x) {
        double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

inline double neumaier_total(std::span<const double> xs) {
    NeumaierSum s;
    for (double x : xs) s.add(x);
    return s.value();
}

// Trapezoid rule on a uniform grid with spacing h.
inline double trapezoid(std::span<const double> f, double h) {
    if (f.size() < 2) return 0.0;
    NeumaierSum s;
    s.add(0.5 * f.front());
    for (size_t i = 1; i + 1 < f.size(); ++i) s.add(f[i]);
    s.add(0.5 * f.back());
    return s.value() * h;
}

// Trapezoid rule on an arbitrary monotone grid.
inline double trapezoid(std::span<const double> t, std::span<const double> f) {
    NeumaierSum s;
    for (size_t i = 0; i + 1 < t.size(); ++i)
        s.add(0.5 * (t[i + 1] - t[i]) * (f[i] + f[i + 1]));
    return s.value();
}

// Shortest decimal round-trip formatting. All CSV artifacts go through this
// so byte-level reproducibility only depends on the values themselves.
inline std::string format_double(double x) {
    char buf[40];
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, x);
        if (std::strtod(buf, nullptr) == x) break;
    }
    return buf;
}

inline double sigma_mobility(double u) { return u * (1.0 - u); }

} // namespace exc
