#pragma once

#include <vector>

#include "exc/profile.hpp"
#include "exc/rate_model.hpp"
#include "exc/test_function.hpp"

namespace exc {

// Uniformization oracle on small lattices: the full 2^{N-1}-state law at
// time T, paired with each observable. Expensive but exact up to the
// truncated Poisson tail, which is kept below tail_tol in total mass (so
// expectations carry an absolute error <= tail_tol * sup|H|).
struct ExactLawOptions {
    double tail_tol = 1e-10;
    // Uniformization rate as a multiple of the largest exit rate; any value
    // >= 1 gives the same law, which the tests exploit as a consistency check.
    double lambda_scale = 1.05;
    double max_lambda_T = 600.0;
    // Optional static tilt: every rate picks up the same exponential weight
    // the simulator applies. Uniformization needs a constant generator, so
    // time-dependent tilts are rejected.
    const TestFunction* tilt = nullptr;
};

std::vector<double> exact_law_small_N(const RateModel& model, int N,
                                      const SpaceProfile& gamma, double T,
                                      const std::vector<Observable>& battery,
                                      const ExactLawOptions& opts = {});

double exact_law_small_N(const RateModel& model, int N,
                         const SpaceProfile& gamma, double T,
                         const SpaceProfile& H,
                         const ExactLawOptions& opts = {});

} // namespace exc
