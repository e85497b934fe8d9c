#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "exc/heat_solver.hpp"
#include "exc/profile.hpp"
#include "exc/rate_model.hpp"
#include "exc/test_function.hpp"

namespace exc {

inline constexpr const char* harness_version = "0.1.0";

enum class ExperimentKind {
    simulate,
    pde,
    stationary,
    hydro_compare,
    tilt_compare,
    ldp_check,
    convergence_study,
};

const char* kind_name(ExperimentKind k);
ExperimentKind kind_from_name(const std::string& name);

// Everything an experiment needs, parsed and validated up front so that a
// bad config never leaves partial artifacts behind.
struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::simulate;
    RateModel model;
    nlohmann::json echo; // the source JSON, reproduced in the manifest

    std::vector<int> lattice_sizes;
    int replicas = 1;
    uint64_t seed = 1;
    double T = 0.0;
    std::vector<double> sample_times; // empty: 11 uniform times in [0, T]
    SpaceProfile gamma = SpaceProfile::constant(0.5);
    std::vector<Observable> observables; // default: standard battery

    std::optional<TestFunction> tilt;      // simulate / tilt-compare
    std::vector<TestFunction> tilt_battery; // ldp-check

    int grid_n = 256;
    int reference_n = 256;
    double solver_dt = 0.0; // 0: scheme default
    TimeScheme scheme = TimeScheme::explicit_euler;
    PfrakVariant variant = PfrakVariant::consistent;
    bool write_binary = false;

    int ldp_p = 6;
    int ldp_J = 8;
    int path_slices = 401;
    double zero_tol = 1e-3; // asserted on the hydrodynamic path's cost

    std::vector<int> grid_list; // convergence-study; default {64,128,256}
};

ExperimentConfig parse_experiment_config_json(const nlohmann::json& j,
                                              const std::string& source);
ExperimentConfig parse_experiment_config(const std::string& path);

struct ComparisonCell {
    int N = 0;
    double t = 0.0;
    std::string observable_id;
    double mean = 0.0;
    double se = 0.0;
    bool se_available = false;
    double pde = 0.0;
    double gap = 0.0;
};

struct ComparisonReport {
    std::vector<int> sizes;
    std::vector<ComparisonCell> cells; // ordered by (size, time, observable)
    std::vector<double> sup_gap;       // per size
    std::vector<double> sup_gap_se;    // standard error at the sup cell
    bool se_available = false;
    // sup gaps non-increasing along the size list, with a two-standard-error
    // allowance per comparison
    bool non_increasing = true;

    nlohmann::json to_json() const;
};

struct CompareOptions {
    std::vector<double> sample_times; // empty: 11 uniform times
    uint64_t seed = 1;
    int threads = 1;
    int reference_n = 256;
    std::optional<TestFunction> tilt;
    // Boundary-current form used by the tilted reference solve. The
    // perturbed equation exists in two readings that differ only when a
    // tilt is present; see SolverOptions::variant.
    PfrakVariant variant = PfrakVariant::consistent;
};

ComparisonReport hydro_compare(const RateModel& model,
                               const SpaceProfile& gamma,
                               const std::vector<int>& sizes, int replicas,
                               double T,
                               const std::vector<Observable>& observables,
                               const CompareOptions& opt = {});

ComparisonReport tilt_compare(const RateModel& model,
                              const SpaceProfile& gamma, const TestFunction& G,
                              const std::vector<int>& sizes, int replicas,
                              double T,
                              const std::vector<Observable>& observables,
                              CompareOptions opt = {});

struct RunResult {
    bool ok = true;                    // all internal assertions passed
    std::vector<std::string> failures; // which assertions did not
    std::vector<std::string> artifacts;
    nlohmann::json report;
    double wall_clock_seconds = 0.0;
};

// Dispatches the experiment, writes its artifacts plus manifest.json under
// out_dir, and reports which internal assertions (if any) failed.
RunResult run_experiment(const ExperimentConfig& cfg,
                         const std::string& out_dir, int threads);

} // namespace exc
