#include "exc/experiment.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "exc/ldp.hpp"
#include "exc/numeric.hpp"
#include "exc/parallel.hpp"
#include "exc/path_density.hpp"
#include "exc/rng.hpp"
#include "exc/simulator.hpp"

namespace exc {

namespace fs = std::filesystem;

const char* kind_name(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::simulate: return "simulate";
        case ExperimentKind::pde: return "pde";
        case ExperimentKind::stationary: return "stationary";
        case ExperimentKind::hydro_compare: return "hydro-compare";
        case ExperimentKind::tilt_compare: return "tilt-compare";
        case ExperimentKind::ldp_check: return "ldp-check";
        case ExperimentKind::convergence_study: return "convergence-study";
    }
    return "?";
}

ExperimentKind kind_from_name(const std::string& name) {
    for (ExperimentKind k :
         {ExperimentKind::simulate, ExperimentKind::pde,
          ExperimentKind::stationary, ExperimentKind::hydro_compare,
          ExperimentKind::tilt_compare, ExperimentKind::ldp_check,
          ExperimentKind::convergence_study})
        if (name == kind_name(k)) return k;
    throw std::invalid_argument("unknown experiment kind: " + name);
}

namespace {

[[noreturn]] void config_error(const std::string& source,
                               const std::string& field,
                               const std::string& what) {
    throw std::invalid_argument(source + ": " + field + ": " + what);
}

RateModel parse_model(const nlohmann::json& j, const std::string& source) {
    if (!j.is_object()) config_error(source, "model", "must be an object");
    if (j.contains("file")) {
        const std::string path = j.at("file").get<std::string>();
        if (!fs::exists(path))
            config_error(source, "model.file", "no such file: " + path);
        return load_model(path);
    }
    if (j.contains("random")) {
        const auto& r = j.at("random");
        const int l = r.at("l").get<int>();
        const uint64_t seed = r.at("seed").get<uint64_t>();
        const double density = r.value("density", 0.5);
        return random_irreducible_model(l, seed, density);
    }
    const std::string preset = j.value("preset", std::string());
    if (preset == "l3")
        return build_l3(j.value("a", 1.0), j.value("b", 2.0),
                        j.value("a2", -1.0));
    if (preset == "l1")
        return build_l1(j.value("rho_minus", 0.5), j.value("rho_plus", 0.5),
                        j.value("lambda_minus", 1.0),
                        j.value("lambda_plus", 1.0));
    config_error(source, "model",
                 "expected preset \"l3\"/\"l1\", a \"file\", or \"random\"");
}

TestFunction parse_tilt(const nlohmann::json& j, double T,
                        const std::string& source, const std::string& field) {
    if (j.is_object() && j.contains("affine"))
        return affine_tilt(j.at("affine").get<double>(), T);
    if (j.is_object() && j.contains("cosine")) {
        const auto& c = j.at("cosine");
        return cosine_tilt(c.value("mode", 1),
                           c.at("amplitude").get<double>(), T);
    }
    TestFunction g = TestFunction::from_json(j);
    if (g.flavor() != BasisFlavor::free_boundary)
        config_error(source, field, "tilts use the free-boundary family");
    if (g.horizon() < T)
        config_error(source, field, "tilt horizon is shorter than T");
    return g;
}

std::vector<double> default_sample_times(double T) {
    std::vector<double> out;
    for (int k = 0; k <= 10; ++k) out.push_back(T * double(k) / 10.0);
    return out;
}

std::string fmt_int(long long v) { return std::to_string(v); }

// <pi, H> converges to int H rho dx, so the deterministic side of every
// comparison is this trapezoid pairing on the reference grid.
double density_pairing(const Grid& grid, const std::vector<double>& rho,
                       const SpaceProfile& H) {
    NeumaierSum s;
    for (int i = 0; i <= grid.n; ++i) {
        const double w = (i == 0 || i == grid.n) ? 0.5 * grid.dx() : grid.dx();
        s.add(w * H(grid.x(i)) * rho[size_t(i)]);
    }
    return s.value();
}

struct EnsembleResult {
    std::vector<double> times;
    std::vector<std::string> observable_ids;
    // [replica][time][observable]
    std::vector<std::vector<std::vector<double>>> values;
    uint64_t bulk_events = 0, left_events = 0, right_events = 0;
};

// Replica streams derive from the cell seed with the usual splitmix step,
// so growing M extends the ensemble without disturbing earlier replicas.
EnsembleResult run_ensemble(const RateModel& model, const SpaceProfile& gamma,
                            int N, int replicas, double T,
                            const std::vector<double>& sample_times,
                            const std::vector<Observable>& observables,
                            const std::optional<TestFunction>& tilt,
                            uint64_t cell_seed, int threads) {
    SimConfig base;
    base.N = N;
    base.model = model;
    base.gamma = gamma;
    base.T = T;
    base.sample_times = sample_times;
    base.observables = observables;
    base.tilt = tilt;

    EnsembleResult out;
    out.values.resize(size_t(replicas));
    std::vector<uint64_t> counts(size_t(replicas) * 3, 0);
    parallel_for(replicas, threads, [&](int r) {
        Rng rng = replica_rng(cell_seed, uint64_t(r));
        Simulator sim(base);
        const TrajectoryRecord traj = sim.run(rng);
        out.values[size_t(r)] = traj.values;
        counts[size_t(r) * 3 + 0] = traj.bulk_events;
        counts[size_t(r) * 3 + 1] = traj.left_events;
        counts[size_t(r) * 3 + 2] = traj.right_events;
        if (r == 0) {
            out.times = traj.times;
            out.observable_ids = traj.observable_ids;
        }
    });
    for (int r = 0; r < replicas; ++r) {
        out.bulk_events += counts[size_t(r) * 3 + 0];
        out.left_events += counts[size_t(r) * 3 + 1];
        out.right_events += counts[size_t(r) * 3 + 2];
    }
    return out;
}

struct MeanSe {
    double mean = 0.0;
    double se = 0.0;
};

// Replica-order two-pass reduction with compensated sums: the result is one
// fixed sequence of floating-point operations no matter how many workers
// produced the inputs.
MeanSe reduce_cell(const EnsembleResult& e, size_t k, size_t o) {
    const size_t M = e.values.size();
    NeumaierSum sum;
    for (size_t r = 0; r < M; ++r) sum.add(e.values[r][k][o]);
    MeanSe out;
    out.mean = sum.value() / double(M);
    if (M >= 2) {
        NeumaierSum sq;
        for (size_t r = 0; r < M; ++r) {
            const double d = e.values[r][k][o] - out.mean;
            sq.add(d * d);
        }
        out.se = std::sqrt(sq.value() / (double(M) * double(M - 1)));
    }
    return out;
}

void write_ensemble_csv(std::ostream& os, const EnsembleResult& e) {
    os << "replica,t,observable_id,value\n";
    for (size_t r = 0; r < e.values.size(); ++r)
        for (size_t k = 0; k < e.times.size(); ++k)
            for (size_t o = 0; o < e.observable_ids.size(); ++o)
                os << fmt_int((long long)r) << ',' << format_double(e.times[k])
                   << ',' << e.observable_ids[o] << ','
                   << format_double(e.values[r][k][o]) << '\n';
}

ComparisonReport compare_impl(const RateModel& model,
                              const SpaceProfile& gamma,
                              const std::vector<int>& sizes, int replicas,
                              double T,
                              const std::vector<Observable>& observables,
                              const CompareOptions& opt,
                              std::vector<EnsembleResult>* keep_ensembles) {
    if (sizes.empty()) throw std::invalid_argument("need at least one size");
    for (size_t i = 1; i < sizes.size(); ++i)
        if (sizes[i] <= sizes[i - 1])
            throw std::invalid_argument("sizes must be ascending");
    if (replicas < 1) throw std::invalid_argument("need at least one replica");
    if (!(T > 0.0)) throw std::invalid_argument("T must be positive");

    const std::vector<double> times =
        opt.sample_times.empty() ? default_sample_times(T) : opt.sample_times;

    // one deterministic reference, as fine as requested
    Grid ref(opt.reference_n);
    SolverOptions sopt;
    sopt.T = T;
    sopt.variant = opt.variant;
    const DensityField field = solve_perturbed(
        [&gamma](double x) { return gamma(x); }, model, opt.tilt, ref, sopt);

    std::vector<EnsembleResult> ensembles(sizes.size());
    for (size_t s = 0; s < sizes.size(); ++s) {
        // decorrelate cells by folding the size into the seed, then derive
        // replica streams the standard way
        const uint64_t cell_seed = opt.seed ^ Rng::mix(uint64_t(sizes[s]));
        ensembles[s] =
            run_ensemble(model, gamma, sizes[s], replicas, T, times,
                         observables, opt.tilt, cell_seed, opt.threads);
    }

    ComparisonReport rep;
    rep.sizes = sizes;
    rep.se_available = replicas >= 2;
    for (size_t s = 0; s < sizes.size(); ++s) {
        const EnsembleResult& e = ensembles[s];
        double sup = -1.0, sup_se = 0.0;
        for (size_t k = 0; k < e.times.size(); ++k) {
            const std::vector<double> rho = field.at_time(e.times[k]);
            for (size_t o = 0; o < e.observable_ids.size(); ++o) {
                const MeanSe ms = reduce_cell(e, k, o);
                ComparisonCell cell;
                cell.N = sizes[s];
                cell.t = e.times[k];
                cell.observable_id = e.observable_ids[o];
                cell.mean = ms.mean;
                cell.se = ms.se;
                cell.se_available = rep.se_available;
                cell.pde = density_pairing(ref, rho, observables[o].f);
                cell.gap = std::abs(ms.mean - cell.pde);
                if (cell.gap > sup) {
                    sup = cell.gap;
                    sup_se = ms.se;
                }
                rep.cells.push_back(std::move(cell));
            }
        }
        rep.sup_gap.push_back(sup);
        rep.sup_gap_se.push_back(sup_se);
    }
    for (size_t s = 1; s < rep.sup_gap.size(); ++s) {
        const double allowance =
            2.0 * (rep.sup_gap_se[s - 1] + rep.sup_gap_se[s]);
        if (rep.sup_gap[s] > rep.sup_gap[s - 1] + allowance)
            rep.non_increasing = false;
    }
    if (keep_ensembles) *keep_ensembles = std::move(ensembles);
    return rep;
}

void write_text_file(const std::string& path, const std::string& body) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + path);
    os << body;
    if (!os) throw std::runtime_error("short write to " + path);
}

std::string json_pretty(const nlohmann::json& j) { return j.dump(2) + "\n"; }

double sup_deviation_from_tilt(const TestFunction& A, const TestFunction& G,
                               double T) {
    double sup = 0.0;
    for (int k = 0; k <= 20; ++k)
        for (int i = 0; i <= 20; ++i) {
            const double t = T * double(k) / 20.0;
            const double x = double(i) / 20.0;
            sup = std::max(sup, std::abs(A.value(t, x) - G.value(t, x)));
        }
    return sup;
}

} // namespace

nlohmann::json ComparisonReport::to_json() const {
    nlohmann::json cells_json = nlohmann::json::array();
    for (const ComparisonCell& c : cells)
        cells_json.push_back({{"N", c.N},
                              {"t", c.t},
                              {"observable_id", c.observable_id},
                              {"mean", c.mean},
                              {"se", c.se},
                              {"se_available", c.se_available},
                              {"pde", c.pde},
                              {"gap", c.gap}});
    return {{"sizes", sizes},
            {"cells", std::move(cells_json)},
            {"sup_gap", sup_gap},
            {"sup_gap_se", sup_gap_se},
            {"se_available", se_available},
            {"non_increasing", non_increasing}};
}

ComparisonReport hydro_compare(const RateModel& model,
                               const SpaceProfile& gamma,
                               const std::vector<int>& sizes, int replicas,
                               double T,
                               const std::vector<Observable>& observables,
                               const CompareOptions& opt) {
    return compare_impl(model, gamma, sizes, replicas, T, observables, opt,
                        nullptr);
}

ComparisonReport tilt_compare(const RateModel& model,
                              const SpaceProfile& gamma, const TestFunction& G,
                              const std::vector<int>& sizes, int replicas,
                              double T,
                              const std::vector<Observable>& observables,
                              CompareOptions opt) {
    opt.tilt = G;
    return compare_impl(model, gamma, sizes, replicas, T, observables, opt,
                        nullptr);
}

ExperimentConfig parse_experiment_config_json(const nlohmann::json& j,
                                              const std::string& source) {
    ExperimentConfig cfg;
    cfg.echo = j;
    if (!j.is_object()) config_error(source, "(root)", "must be an object");
    if (!j.contains("kind")) config_error(source, "kind", "missing");
    cfg.kind = kind_from_name(j.at("kind").get<std::string>());
    if (!j.contains("model")) config_error(source, "model", "missing");
    cfg.model = parse_model(j.at("model"), source);
    const int l = cfg.model.window_size();

    cfg.T = j.value("T", 0.0);
    cfg.replicas = j.value("replicas", 1);
    cfg.seed = j.value("seed", uint64_t(1));
    if (j.contains("sample_times"))
        cfg.sample_times = j.at("sample_times").get<std::vector<double>>();
    if (j.contains("lattice_sizes"))
        cfg.lattice_sizes = j.at("lattice_sizes").get<std::vector<int>>();
    if (j.contains("gamma")) {
        try {
            cfg.gamma = SpaceProfile::from_json(j.at("gamma"));
        } catch (const std::exception& e) {
            config_error(source, "gamma", e.what());
        }
        for (int i = 0; i <= 100; ++i) {
            const double v = cfg.gamma(double(i) / 100.0);
            if (!(v >= 0.0 && v <= 1.0))
                config_error(source, "gamma",
                             "initial profile leaves [0,1] at x = " +
                                 format_double(double(i) / 100.0));
        }
    }
    if (j.contains("observables")) {
        for (const auto& name : j.at("observables")) {
            try {
                cfg.observables.push_back(
                    observable_by_name(name.get<std::string>()));
            } catch (const std::exception& e) {
                config_error(source, "observables", e.what());
            }
        }
    } else {
        cfg.observables = standard_observables();
    }

    if (j.contains("grid")) {
        const auto& g = j.at("grid");
        cfg.grid_n = g.value("n", cfg.grid_n);
        cfg.reference_n = g.value("reference_n", cfg.reference_n);
        cfg.solver_dt = g.value("dt", 0.0);
        cfg.write_binary = g.value("binary", false);
        const std::string scheme = g.value("scheme", std::string("explicit"));
        if (scheme == "explicit")
            cfg.scheme = TimeScheme::explicit_euler;
        else if (scheme == "crank-nicolson")
            cfg.scheme = TimeScheme::crank_nicolson;
        else
            config_error(source, "grid.scheme",
                         "expected \"explicit\" or \"crank-nicolson\"");
        const std::string variant =
            g.value("variant", std::string("consistent"));
        if (variant == "consistent")
            cfg.variant = PfrakVariant::consistent;
        else if (variant == "paper")
            cfg.variant = PfrakVariant::paper;
        else
            config_error(source, "grid.variant",
                         "expected \"consistent\" or \"paper\"");
        if (cfg.grid_n < 8 || cfg.reference_n < 8)
            config_error(source, "grid", "grids need at least 8 cells");
    }

    if (j.contains("tilt"))
        cfg.tilt = parse_tilt(j.at("tilt"), cfg.T, source, "tilt");
    if (j.contains("tilt_battery")) {
        int idx = 0;
        for (const auto& g : j.at("tilt_battery")) {
            cfg.tilt_battery.push_back(parse_tilt(
                g, cfg.T, source, "tilt_battery[" + fmt_int(idx) + "]"));
            ++idx;
        }
    }

    if (j.contains("ldp")) {
        const auto& d = j.at("ldp");
        cfg.ldp_p = d.value("p", cfg.ldp_p);
        cfg.ldp_J = d.value("J", cfg.ldp_J);
        cfg.path_slices = d.value("slices", cfg.path_slices);
        cfg.zero_tol = d.value("zero_tol", cfg.zero_tol);
        if (cfg.ldp_p < 0 || cfg.ldp_J < 1 || cfg.path_slices < 3)
            config_error(source, "ldp", "need p >= 0, J >= 1, slices >= 3");
    }
    if (j.contains("grid_list"))
        cfg.grid_list = j.at("grid_list").get<std::vector<int>>();

    // kind-specific requirements
    const bool needs_lattice = cfg.kind == ExperimentKind::simulate ||
                               cfg.kind == ExperimentKind::hydro_compare ||
                               cfg.kind == ExperimentKind::tilt_compare;
    if (needs_lattice) {
        if (cfg.lattice_sizes.empty())
            config_error(source, "lattice_sizes", "missing or empty");
        for (int N : cfg.lattice_sizes)
            if (N - 1 < 2 * l + 2)
                config_error(source, "lattice_sizes",
                             "N = " + fmt_int(N) +
                                 " violates N - 1 >= 2l + 2 for l = " +
                                 fmt_int(l));
        for (size_t i = 1; i < cfg.lattice_sizes.size(); ++i)
            if (cfg.lattice_sizes[i] <= cfg.lattice_sizes[i - 1])
                config_error(source, "lattice_sizes", "must be ascending");
    }
    if (cfg.replicas < 1) config_error(source, "replicas", "must be >= 1");
    if (cfg.kind == ExperimentKind::simulate) {
        if (!(cfg.T >= 0.0)) config_error(source, "T", "must be >= 0");
    } else if (cfg.kind != ExperimentKind::stationary &&
               cfg.kind != ExperimentKind::convergence_study) {
        if (!(cfg.T > 0.0)) config_error(source, "T", "must be positive");
    }
    for (double t : cfg.sample_times)
        if (!(t >= 0.0 && t <= cfg.T))
            config_error(source, "sample_times", "must lie in [0, T]");
    if (cfg.kind == ExperimentKind::tilt_compare && !cfg.tilt)
        config_error(source, "tilt", "required for tilt-compare");
    if (cfg.tilt && cfg.scheme == TimeScheme::crank_nicolson)
        config_error(source, "grid.scheme",
                     "tilted runs use the explicit scheme");
    if (cfg.tilt && needs_lattice) {
        // same bound the simulator enforces, reported at config time; the
        // smallest lattice has the largest N/(N-1) factor
        const int N = cfg.lattice_sizes.front();
        const double worst = double(std::max(l, 2)) * cfg.tilt->sup_bound() *
                             double(N) / double(N - 1);
        if (worst > BoundaryMoments::exponent_cap)
            config_error(source, "tilt", "strength exceeds the exponent cap");
    }
    if (cfg.kind == ExperimentKind::convergence_study) {
        if (cfg.grid_list.empty()) cfg.grid_list = {64, 128, 256};
        if (cfg.grid_list.size() < 2)
            config_error(source, "grid_list", "need at least two grids");
        for (size_t i = 0; i < cfg.grid_list.size(); ++i) {
            if (cfg.grid_list[i] < 8)
                config_error(source, "grid_list", "grids need >= 8 cells");
            if (i > 0 && cfg.grid_list[i] != 2 * cfg.grid_list[i - 1])
                config_error(source, "grid_list",
                             "each grid must double the previous one");
        }
        if (!(cfg.T > 0.0)) cfg.T = 0.1;
    }
    return cfg;
}

ExperimentConfig parse_experiment_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::invalid_argument(path + ": cannot open config");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(is);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::invalid_argument(path + ": " + e.what());
    }
    return parse_experiment_config_json(j, path);
}

namespace {

SolverOptions solver_options(const ExperimentConfig& cfg) {
    SolverOptions opt;
    opt.T = cfg.T;
    opt.dt = cfg.solver_dt;
    opt.variant = cfg.variant;
    opt.scheme = cfg.scheme;
    return opt;
}

void run_simulate(const ExperimentConfig& cfg, const std::string& out_dir,
                  int threads, RunResult& res) {
    std::vector<double> times = cfg.sample_times;
    if (times.empty() && cfg.T > 0.0) times = default_sample_times(cfg.T);
    nlohmann::json sizes_json = nlohmann::json::array();
    for (int N : cfg.lattice_sizes) {
        const uint64_t cell_seed = cfg.seed ^ Rng::mix(uint64_t(N));
        const EnsembleResult e =
            run_ensemble(cfg.model, cfg.gamma, N, cfg.replicas, cfg.T, times,
                         cfg.observables, cfg.tilt, cell_seed, threads);
        std::ostringstream csv;
        write_ensemble_csv(csv, e);
        const std::string path =
            out_dir + "/trajectories_N" + fmt_int(N) + ".csv";
        write_text_file(path, csv.str());
        res.artifacts.push_back(path);

        nlohmann::json finals = nlohmann::json::object();
        const size_t last = e.times.size() - 1;
        for (size_t o = 0; o < e.observable_ids.size(); ++o) {
            const MeanSe ms = reduce_cell(e, last, o);
            finals[e.observable_ids[o]] = {
                {"mean", ms.mean},
                {"se", ms.se},
                {"se_available", cfg.replicas >= 2}};
        }
        sizes_json.push_back({{"N", N},
                              {"final_time", e.times.back()},
                              {"final", std::move(finals)},
                              {"bulk_events", e.bulk_events},
                              {"left_events", e.left_events},
                              {"right_events", e.right_events}});
    }
    res.report = {{"kind", "simulate"}, {"sizes", std::move(sizes_json)}};
}

void run_pde(const ExperimentConfig& cfg, const std::string& out_dir,
             RunResult& res) {
    Grid grid(cfg.grid_n);
    const DensityField field = solve_perturbed(
        [&cfg](double x) { return cfg.gamma(x); }, cfg.model, cfg.tilt, grid,
        solver_options(cfg));

    std::ostringstream csv;
    save_field_csv(field, csv);
    const std::string csv_path = out_dir + "/field.csv";
    write_text_file(csv_path, csv.str());
    res.artifacts.push_back(csv_path);
    if (cfg.write_binary) {
        const std::string bin_path = out_dir + "/field.bin";
        save_field_binary(field, bin_path);
        res.artifacts.push_back(bin_path);
    }

    const BoundsReport bounds = parabolic_bounds_check(field);
    if (!bounds.pass)
        res.failures.push_back("density bounds: " + bounds.message);
    const std::vector<double> residual = cfg.tilt
        ? mass_balance_residual(field, cfg.model, cfg.tilt, cfg.variant)
        : mass_balance_residual(field, cfg.model);
    double worst = 0.0;
    for (double r : residual) worst = std::max(worst, std::abs(r));
    res.report = {{"kind", "pde"},
                  {"n", cfg.grid_n},
                  {"snapshots", field.snapshots()},
                  {"bounds_pass", bounds.pass},
                  {"interior_eps", bounds.eps},
                  {"max_mass_residual", worst}};
}

void run_stationary(const ExperimentConfig& cfg, RunResult& res) {
    const std::vector<StationaryProfile> profiles =
        stationary_profiles(cfg.model);
    Grid grid(cfg.grid_n);
    nlohmann::json rows = nlohmann::json::array();
    for (const StationaryProfile& p : profiles) {
        const Stability s = stability_heuristic(cfg.model, p, grid);
        rows.push_back({{"alpha", p.alpha},
                        {"beta", p.beta},
                        {"residual_left", p.residual_left},
                        {"residual_right", p.residual_right},
                        {"stability", stability_name(s)}});
    }
    res.report = {{"kind", "stationary"},
                  {"count", profiles.size()},
                  {"profiles", std::move(rows)}};
    if (profiles.empty())
        res.failures.push_back("no stationary profile found in the scan");
}

void run_compare(const ExperimentConfig& cfg, const std::string& out_dir,
                 int threads, RunResult& res) {
    CompareOptions opt;
    opt.sample_times = cfg.sample_times;
    opt.seed = cfg.seed;
    opt.threads = threads;
    opt.reference_n = cfg.reference_n;
    opt.variant = cfg.variant;
    if (cfg.kind == ExperimentKind::tilt_compare) opt.tilt = cfg.tilt;

    std::vector<EnsembleResult> ensembles;
    const ComparisonReport rep =
        compare_impl(cfg.model, cfg.gamma, cfg.lattice_sizes, cfg.replicas,
                     cfg.T, cfg.observables, opt, &ensembles);

    for (size_t s = 0; s < ensembles.size(); ++s) {
        std::ostringstream csv;
        write_ensemble_csv(csv, ensembles[s]);
        const std::string path = out_dir + "/ensemble_N" +
                                 fmt_int(cfg.lattice_sizes[s]) + ".csv";
        write_text_file(path, csv.str());
        res.artifacts.push_back(path);
    }
    std::ostringstream cmp;
    cmp << "N,t,observable_id,mean,se,pde,gap\n";
    for (const ComparisonCell& c : rep.cells) {
        cmp << fmt_int(c.N) << ',' << format_double(c.t) << ','
            << c.observable_id << ',' << format_double(c.mean) << ',';
        if (c.se_available) cmp << format_double(c.se);
        cmp << ',' << format_double(c.pde) << ',' << format_double(c.gap)
            << '\n';
    }
    const std::string cmp_path = out_dir + "/comparison.csv";
    write_text_file(cmp_path, cmp.str());
    res.artifacts.push_back(cmp_path);

    res.report = rep.to_json();
    res.report["kind"] = kind_name(cfg.kind);
    if (!rep.non_increasing)
        res.failures.push_back(
            "sup gap increased along the size list beyond two standard "
            "errors");
}

void run_ldp_check(const ExperimentConfig& cfg, RunResult& res) {
    Grid grid(cfg.grid_n);
    LdpOptions opt;
    opt.p = cfg.ldp_p;
    opt.J = cfg.ldp_J;
    auto gamma_fn = [&cfg](double x) { return cfg.gamma(x); };

    nlohmann::json rows = nlohmann::json::array();

    const DensityField hydro =
        solve_hydro(gamma_fn, cfg.model, grid, solver_options(cfg));
    const PathDensity hydro_path =
        PathDensity::from_field(hydro, cfg.path_slices);
    const EvalResult zero = eval_I(hydro_path, cfg.model, gamma_fn, opt);
    rows.push_back({{"label", "hydrodynamic"},
                    {"I", zero.value},
                    {"iterations", zero.iterations},
                    {"grad_norm", zero.grad_norm}});
    if (!(zero.value <= cfg.zero_tol))
        res.failures.push_back("hydrodynamic path cost exceeds zero_tol");

    int idx = 0;
    for (const TestFunction& G : cfg.tilt_battery) {
        const DensityField field = solve_perturbed(
            gamma_fn, cfg.model, G, grid, solver_options(cfg));
        const PathDensity path =
            PathDensity::from_field(field, cfg.path_slices);
        const EvalResult ev = eval_I(path, cfg.model, gamma_fn, opt);
        const double J_G = eval_J(path, G, cfg.model, gamma_fn);
        const DecompositionReport dec = decompose_I(path, cfg.model, opt);
        const double residual = std::abs(dec.I - (dec.I1 + dec.I2));
        const double budget = std::max(1e-3, 0.02 * std::abs(dec.I));
        const std::string label = "tilt[" + fmt_int(idx) + "]";
        rows.push_back({{"label", label},
                        {"I", ev.value},
                        {"J_at_tilt", J_G},
                        {"value_gap", std::abs(ev.value - J_G)},
                        {"argmax_sup_distance",
                         sup_deviation_from_tilt(ev.argmax, G, cfg.T)},
                        {"I1", dec.I1},
                        {"I2", dec.I2},
                        {"decomposition_residual", residual},
                        {"unbounded", dec.any_phi_unbounded}});
        if (dec.any_phi_unbounded)
            res.failures.push_back(label + ": boundary transform unbounded");
        else if (residual > budget)
            res.failures.push_back(label + ": decomposition residual " +
                                   format_double(residual) + " > " +
                                   format_double(budget));
        ++idx;
    }
    res.report = {{"kind", "ldp-check"},
                  {"n", cfg.grid_n},
                  {"p", cfg.ldp_p},
                  {"J", cfg.ldp_J},
                  {"rows", std::move(rows)}};
}

void run_convergence_study(const ExperimentConfig& cfg,
                           const std::string& out_dir, RunResult& res) {
    auto gamma_fn = [&cfg](double x) { return cfg.gamma(x); };
    std::vector<DensityField> fields;
    for (int n : cfg.grid_list) {
        Grid grid(n);
        SolverOptions opt = solver_options(cfg);
        opt.dt = 0.0; // each grid runs at its own stable step
        fields.push_back(
            solve_perturbed(gamma_fn, cfg.model, cfg.tilt, grid, opt));
    }

    // final-time L2 difference of consecutive solutions on the coarse nodes
    std::vector<double> diffs;
    for (size_t i = 0; i + 1 < fields.size(); ++i) {
        const DensityField& coarse = fields[i];
        const DensityField& fine = fields[i + 1];
        const std::vector<double> uc = coarse.at_time(coarse.T());
        const std::vector<double> uf = fine.at_time(fine.T());
        NeumaierSum s;
        const int nc = coarse.grid().n;
        for (int k = 0; k <= nc; ++k) {
            const double w =
                (k == 0 || k == nc) ? 0.5 * coarse.grid().dx()
                                    : coarse.grid().dx();
            const double d = uc[size_t(k)] - uf[size_t(2 * k)];
            s.add(w * d * d);
        }
        diffs.push_back(std::sqrt(s.value()));
    }
    std::vector<double> orders;
    for (size_t i = 0; i + 1 < diffs.size(); ++i)
        orders.push_back(std::log2(diffs[i] / diffs[i + 1]));

    std::ostringstream csv;
    csv << "n,l2_diff_to_next,observed_order\n";
    for (size_t i = 0; i < diffs.size(); ++i) {
        csv << fmt_int(cfg.grid_list[i]) << ',' << format_double(diffs[i])
            << ',';
        if (i < orders.size()) csv << format_double(orders[i]);
        csv << '\n';
    }
    const std::string path = out_dir + "/convergence.csv";
    write_text_file(path, csv.str());
    res.artifacts.push_back(path);

    nlohmann::json mass = nlohmann::json::array();
    for (size_t i = 0; i < fields.size(); ++i) {
        const std::vector<double> r = cfg.tilt
            ? mass_balance_residual(fields[i], cfg.model, cfg.tilt,
                                    cfg.variant)
            : mass_balance_residual(fields[i], cfg.model);
        double worst = 0.0;
        for (double v : r) worst = std::max(worst, std::abs(v));
        mass.push_back({{"n", cfg.grid_list[i]}, {"max_residual", worst}});
    }
    res.report = {{"kind", "convergence-study"},
                  {"grids", cfg.grid_list},
                  {"l2_diffs", diffs},
                  {"observed_orders", orders},
                  {"mass_residuals", std::move(mass)}};
}

} // namespace

RunResult run_experiment(const ExperimentConfig& cfg,
                         const std::string& out_dir, int threads) {
    const auto t0 = std::chrono::steady_clock::now();
    fs::create_directories(out_dir);

    RunResult res;
    switch (cfg.kind) {
        case ExperimentKind::simulate:
            run_simulate(cfg, out_dir, threads, res);
            break;
        case ExperimentKind::pde:
            run_pde(cfg, out_dir, res);
            break;
        case ExperimentKind::stationary:
            run_stationary(cfg, res);
            break;
        case ExperimentKind::hydro_compare:
        case ExperimentKind::tilt_compare:
            run_compare(cfg, out_dir, threads, res);
            break;
        case ExperimentKind::ldp_check:
            run_ldp_check(cfg, res);
            break;
        case ExperimentKind::convergence_study:
            run_convergence_study(cfg, out_dir, res);
            break;
    }
    res.ok = res.failures.empty();

    const std::string report_path = out_dir + "/report.json";
    write_text_file(report_path, json_pretty(res.report));
    res.artifacts.push_back(report_path);

    res.wall_clock_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    nlohmann::json manifest = {{"version", harness_version},
                               {"kind", kind_name(cfg.kind)},
                               {"seed", cfg.seed},
                               {"threads", threads},
                               {"ok", res.ok},
                               {"failures", res.failures},
                               {"artifacts", res.artifacts},
                               {"wall_clock_seconds", res.wall_clock_seconds},
                               {"config", cfg.echo}};
    write_text_file(out_dir + "/manifest.json", json_pretty(manifest));
    return res;
}

} // namespace exc
