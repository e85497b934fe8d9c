#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <unistd.h>

#include <json.hpp>

#include "exc/experiment.hpp"
#include "exc/profile.hpp"

using namespace exc;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() /
               ("exc_harness_" + tag + "_" + std::to_string(::getpid()));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string str() const { return path.string(); }
};

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    REQUIRE(bool(is));
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

json base_simulate_config() {
    return json{{"kind", "simulate"},
                {"model", {{"preset", "l3"}, {"a", 1.0}, {"b", 2.0}}},
                {"lattice_sizes", {12}},
                {"replicas", 4},
                {"seed", 7},
                {"T", 0.05},
                {"observables", {"one", "x"}}};
}

} // namespace

TEST_CASE("config parsing fills defaults and echoes the source") {
    json j = base_simulate_config();
    const ExperimentConfig cfg = parse_experiment_config_json(j, "test");
    CHECK(cfg.kind == ExperimentKind::simulate);
    CHECK(cfg.replicas == 4);
    CHECK(cfg.seed == 7);
    CHECK(cfg.lattice_sizes == std::vector<int>{12});
    CHECK(cfg.observables.size() == 2);
    CHECK(cfg.observables[0].id == "one");
    CHECK(cfg.gamma(0.25) == 0.5); // default constant 1/2
    CHECK(cfg.echo == j);

    json h = {{"kind", "hydro-compare"},
              {"model", {{"preset", "l1"}, {"rho_minus", 0.3}, {"rho_plus", 0.8}}},
              {"lattice_sizes", {12, 16}},
              {"replicas", 2},
              {"T", 0.1},
              {"gamma", {{"kind", "cosine"}, {"a", 0.5}, {"b", 0.3}, {"k", 1}}}};
    const ExperimentConfig c2 = parse_experiment_config_json(h, "test");
    CHECK(c2.model.window_size() == 1);
    CHECK(c2.observables.size() == 4); // standard battery by default
    CHECK(c2.gamma(0.0) == doctest::Approx(0.8));
}

TEST_CASE("config diagnostics name the offending field") {
    auto expect_error = [](json j, const std::string& needle) {
        try {
            parse_experiment_config_json(j, "cfg");
            FAIL_CHECK("expected a config error mentioning " << needle);
        } catch (const std::invalid_argument& e) {
            CHECK(std::string(e.what()).find(needle) != std::string::npos);
        }
    };

    json j = base_simulate_config();
    j.erase("kind");
    expect_error(j, "kind");

    j = base_simulate_config();
    j.erase("model");
    expect_error(j, "model");

    j = base_simulate_config();
    j["model"] = {{"file", "/nonexistent/model.json"}};
    expect_error(j, "model.file");

    j = base_simulate_config();
    j["lattice_sizes"] = {8}; // l = 3 needs N - 1 >= 8
    expect_error(j, "lattice_sizes");

    j = base_simulate_config();
    j["observables"] = {"one", "bogus"};
    expect_error(j, "observables");

    j = base_simulate_config();
    j["gamma"] = {{"kind", "cosine"}, {"a", 0.5}, {"b", 0.9}};
    expect_error(j, "gamma");

    j = base_simulate_config();
    j["tilt"] = {{"affine", 300.0}}; // exponent cap at N = 12
    expect_error(j, "tilt");

    j = base_simulate_config();
    j["kind"] = "tilt-compare";
    expect_error(j, "tilt");

    j = base_simulate_config();
    j["grid"] = {{"scheme", "leapfrog"}};
    expect_error(j, "grid.scheme");

    j = base_simulate_config();
    j["tilt"] = {{"affine", 0.5}};
    j["grid"] = {{"scheme", "crank-nicolson"}};
    expect_error(j, "grid.scheme");

    j = base_simulate_config();
    j["sample_times"] = {0.0, 0.2}; // beyond T = 0.05
    expect_error(j, "sample_times");
}

TEST_CASE("malformed model file fails at parse time, before any artifact") {
    TempDir tmp("badmodel");
    const fs::path model = tmp.path / "model.json";
    std::ofstream(model) << "this is not a rate table";
    json j = base_simulate_config();
    j["model"] = {{"file", model.string()}};

    const fs::path out = tmp.path / "out";
    CHECK_THROWS(parse_experiment_config_json(j, "cfg"));
    CHECK_FALSE(fs::exists(out));
}

TEST_CASE("simulate at T = 0 emits one sample per replica") {
    TempDir tmp("t0");
    json j = base_simulate_config();
    j["T"] = 0.0;
    const ExperimentConfig cfg = parse_experiment_config_json(j, "cfg");
    const RunResult res = run_experiment(cfg, tmp.str(), 1);
    CHECK(res.ok);

    const std::string csv = slurp(tmp.path / "trajectories_N12.csv");
    std::istringstream is(csv);
    std::string line;
    std::getline(is, line);
    CHECK(line == "replica,t,observable_id,value");
    int rows = 0;
    while (std::getline(is, line)) ++rows;
    CHECK(rows == 4 * 1 * 2); // replicas x one sample x observables
    CHECK(fs::exists(tmp.path / "manifest.json"));
    CHECK(fs::exists(tmp.path / "report.json"));

    const json manifest = json::parse(slurp(tmp.path / "manifest.json"));
    CHECK(manifest.at("version").get<std::string>() ==
          std::string(harness_version));
    CHECK(manifest.at("kind") == "simulate");
    CHECK(manifest.at("seed") == 7);
    CHECK(manifest.at("ok") == true);
    CHECK(manifest.at("config") == j);
    CHECK(manifest.at("wall_clock_seconds").get<double>() >= 0.0);
}

TEST_CASE("identical seed gives byte-identical CSVs across thread counts") {
    json j = base_simulate_config();
    j["replicas"] = 6;
    const ExperimentConfig cfg = parse_experiment_config_json(j, "cfg");

    TempDir d1("det1"), d2("det2"), d3("det3");
    run_experiment(cfg, d1.str(), 1);
    run_experiment(cfg, d2.str(), 4);
    CHECK(slurp(d1.path / "trajectories_N12.csv") ==
          slurp(d2.path / "trajectories_N12.csv"));

    ExperimentConfig other = cfg;
    other.seed = 8;
    run_experiment(other, d3.str(), 2);
    CHECK(slurp(d1.path / "trajectories_N12.csv") !=
          slurp(d3.path / "trajectories_N12.csv"));
}

TEST_CASE("hydro comparison: stationary root stays within noise of the PDE") {
    const RateModel model = build_l3(1.0, 2.0);
    CompareOptions opt;
    opt.seed = 11;
    opt.reference_n = 64;
    std::vector<Observable> obs = {observable_by_name("one"),
                                   observable_by_name("x"),
                                   observable_by_name("cospix")};
    const ComparisonReport rep =
        hydro_compare(model, SpaceProfile::constant(0.5), {12, 16}, 30, 0.05,
                      obs, opt);
    CHECK(rep.se_available);
    CHECK(rep.cells.size() == 2 * 11 * 3);
    for (const ComparisonCell& c : rep.cells) {
        CHECK(c.gap >= 0.0);
        // the empirical pairing's lattice quadrature offset is exactly zero
        // for this battery at the constant root, so pure noise remains
        CHECK(c.gap <= 3.0 * c.se + 1e-12);
    }
    for (size_t s = 0; s < rep.sup_gap.size(); ++s)
        CHECK(rep.sup_gap[s] >= 0.0);
}

TEST_CASE("single-replica comparison flags standard errors unavailable") {
    const RateModel model = build_l3(1.0, 2.0);
    CompareOptions opt;
    opt.seed = 3;
    opt.reference_n = 32;
    const ComparisonReport rep = hydro_compare(
        model, SpaceProfile::constant(0.5), {12}, 1, 0.02,
        {observable_by_name("one")}, opt);
    CHECK_FALSE(rep.se_available);
    for (const ComparisonCell& c : rep.cells) {
        CHECK_FALSE(c.se_available);
        CHECK(c.se == 0.0);
    }
}

TEST_CASE("zero tilt reproduces the untilted pipeline bit for bit") {
    const RateModel model = build_l3(1.0, 2.0);
    const SpaceProfile gamma = SpaceProfile::cosine(0.5, 0.3, 1);
    std::vector<Observable> obs = {observable_by_name("one"),
                                   observable_by_name("x")};
    CompareOptions opt;
    opt.seed = 21;
    opt.reference_n = 32;

    const ComparisonReport plain =
        hydro_compare(model, gamma, {12, 16}, 5, 0.05, obs, opt);
    const TestFunction zero(BasisFlavor::free_boundary, 1, 2, 0.05);
    const ComparisonReport tilted =
        tilt_compare(model, gamma, zero, {12, 16}, 5, 0.05, obs, opt);

    REQUIRE(plain.cells.size() == tilted.cells.size());
    for (size_t i = 0; i < plain.cells.size(); ++i) {
        CHECK(plain.cells[i].mean == tilted.cells[i].mean);
        CHECK(plain.cells[i].pde == tilted.cells[i].pde);
        CHECK(plain.cells[i].gap == tilted.cells[i].gap);
    }
}

TEST_CASE("the boundary-current variant reaches the tilted reference") {
    const RateModel model = build_l3(1.0, 2.0);
    const SpaceProfile gamma = SpaceProfile::cosine(0.5, 0.3, 1);
    std::vector<Observable> obs = {observable_by_name("one")};
    const TestFunction G = affine_tilt(0.5, 0.05);

    CompareOptions opt;
    opt.seed = 5;
    opt.reference_n = 32;
    const ComparisonReport consistent =
        tilt_compare(model, gamma, G, {12}, 4, 0.05, obs, opt);
    opt.variant = PfrakVariant::paper;
    const ComparisonReport literal =
        tilt_compare(model, gamma, G, {12}, 4, 0.05, obs, opt);

    REQUIRE(consistent.cells.size() == literal.cells.size());
    bool pde_differs = false;
    for (size_t i = 0; i < consistent.cells.size(); ++i) {
        // same seed: the particle side is untouched by the variant
        CHECK(consistent.cells[i].mean == literal.cells[i].mean);
        if (consistent.cells[i].pde != literal.cells[i].pde)
            pde_differs = true;
    }
    CHECK(pde_differs);

    json j = {{"kind", "tilt-compare"},
              {"model", {{"preset", "l3"}}},
              {"T", 0.05},
              {"replicas", 2},
              {"lattice_sizes", {12}},
              {"tilt", {{"affine", 0.5}}},
              {"grid", {{"variant", "paper"}, {"reference_n", 32}}}};
    const ExperimentConfig cfg = parse_experiment_config_json(j, "cfg");
    CHECK(cfg.variant == PfrakVariant::paper);
}

TEST_CASE("stationary experiment reports the three l3 profiles") {
    TempDir tmp("stat");
    json j = {{"kind", "stationary"},
              {"model", {{"preset", "l3"}, {"a", 1.0}, {"b", 2.0}}},
              {"grid", {{"n", 32}}}};
    const ExperimentConfig cfg = parse_experiment_config_json(j, "cfg");
    const RunResult res = run_experiment(cfg, tmp.str(), 1);
    CHECK(res.ok);

    const json rep = json::parse(slurp(tmp.path / "report.json"));
    REQUIRE(rep.at("count") == 3);
    const double lo = (1.0 - std::sqrt(0.5)) / 2.0;
    const double hi = (1.0 + std::sqrt(0.5)) / 2.0;
    const auto& rows = rep.at("profiles");
    CHECK(rows[0].at("alpha").get<double>() == doctest::Approx(lo).epsilon(1e-8));
    CHECK(rows[1].at("alpha").get<double>() == doctest::Approx(0.5).epsilon(1e-8));
    CHECK(rows[2].at("alpha").get<double>() == doctest::Approx(hi).epsilon(1e-8));
    CHECK(rows[0].at("stability") == "stable");
    CHECK(rows[1].at("stability") == "unstable");
    CHECK(rows[2].at("stability") == "stable");
}

TEST_CASE("pde experiment writes the field and passes its own checks") {
    TempDir tmp("pde");
    json j = {{"kind", "pde"},
              {"model", {{"preset", "l3"}, {"a", 1.0}, {"b", 2.0}}},
              {"T", 0.1},
              {"gamma", {{"kind", "cosine"}, {"a", 0.5}, {"b", 0.3}, {"k", 1}}},
              {"grid", {{"n", 32}, {"binary", true}}}};
    const ExperimentConfig cfg = parse_experiment_config_json(j, "cfg");
    const RunResult res = run_experiment(cfg, tmp.str(), 1);
    CHECK(res.ok);
    CHECK(fs::exists(tmp.path / "field.csv"));
    CHECK(fs::exists(tmp.path / "field.bin"));
    const json rep = json::parse(slurp(tmp.path / "report.json"));
    CHECK(rep.at("bounds_pass") == true);
    CHECK(rep.at("max_mass_residual").get<double>() <= 1e-3);

    const std::string csv = slurp(tmp.path / "field.csv");
    CHECK(csv.rfind("t,x,rho\n", 0) == 0);
}

TEST_CASE("convergence study reports second-order refinement") {
    TempDir tmp("conv");
    json j = {{"kind", "convergence-study"},
              {"model", {{"preset", "l3"}, {"a", 1.0}, {"b", 2.0}}},
              {"T", 0.05},
              {"gamma", {{"kind", "cosine"}, {"a", 0.5}, {"b", 0.3}, {"k", 1}}},
              {"grid_list", {32, 64, 128}}};
    const ExperimentConfig cfg = parse_experiment_config_json(j, "cfg");
    const RunResult res = run_experiment(cfg, tmp.str(), 1);
    CHECK(res.ok);
    const json rep = json::parse(slurp(tmp.path / "report.json"));
    const auto orders = rep.at("observed_orders").get<std::vector<double>>();
    REQUIRE(orders.size() == 1);
    CHECK(orders[0] >= 1.5);
    CHECK(orders[0] <= 2.5);
    CHECK(fs::exists(tmp.path / "convergence.csv"));
}

TEST_CASE("ldp-check runs the zero-cost and decomposition battery") {
    TempDir tmp("ldp");
    json j = {{"kind", "ldp-check"},
              {"model", {{"preset", "l3"}, {"a", 1.0}, {"b", 2.0}}},
              {"T", 0.25},
              {"gamma", {{"kind", "cosine"}, {"a", 0.5}, {"b", 0.3}, {"k", 1}}},
              {"grid", {{"n", 64}}},
              {"tilt_battery", {{{"affine", 0.5}}}}};
    const ExperimentConfig cfg = parse_experiment_config_json(j, "cfg");
    REQUIRE(cfg.tilt_battery.size() == 1);
    const RunResult res = run_experiment(cfg, tmp.str(), 1);
    for (const std::string& f : res.failures) MESSAGE(f);
    CHECK(res.ok);

    const json rep = json::parse(slurp(tmp.path / "report.json"));
    const auto& rows = rep.at("rows");
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].at("label") == "hydrodynamic");
    CHECK(rows[0].at("I").get<double>() <= 1e-3);
    CHECK(rows[1].at("decomposition_residual").get<double>() <=
          std::max(1e-3, 0.02 * rows[1].at("I").get<double>()));
    CHECK(rows[1].at("argmax_sup_distance").get<double>() <= 0.05);
    CHECK(rows[1].at("unbounded") == false);
}
