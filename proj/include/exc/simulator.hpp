#pragma once

#include <optional>
#include <string>
#include <vector>

#include "exc/configuration.hpp"
#include "exc/fenwick.hpp"
#include "exc/moments.hpp"
#include "exc/numeric.hpp"
#include "exc/profile.hpp"
#include "exc/rate_model.hpp"
#include "exc/rng.hpp"
#include "exc/test_function.hpp"

namespace exc {

// One replica of the open exclusion process: bulk swaps at rate N^2 per
// discrepant bond, window replacements at rate N * R(window, target).
// An optional tilt G multiplies every rate by exp{N * (<pi', G_t> - <pi, G_t>)}.
// Rates are evaluated at event-construction times, so for time-independent
// tilts (and untilted runs) the chain is simulated exactly; a genuinely
// time-dependent tilt freezes rates between consecutive events.
struct SimConfig {
    int N = 0;
    RateModel model;
    SpaceProfile gamma;
    double T = 0.0;
    std::vector<double> sample_times; // T is appended when missing
    std::vector<Observable> observables;
    std::optional<TestFunction> tilt;
    bool store_configs = false;
    // Cross-check the incremental catalog against a from-scratch rebuild
    // after every event (testing hook; slow).
    bool validate_incremental = false;
};

struct TrajectoryRecord {
    std::vector<double> times;
    std::vector<std::string> observable_ids;
    std::vector<double> initial_values;           // <pi_0, H>
    std::vector<std::vector<double>> values;       // [time][observable]
    // Exactly accumulated generator integrals int_0^{t_k} L <pi_s, H> ds of
    // the simulated (possibly tilted) chain.
    std::vector<std::vector<double>> gen_integral; // [time][observable]
    std::vector<Configuration> configs;            // when store_configs
    uint64_t bulk_events = 0;
    uint64_t left_events = 0;
    uint64_t right_events = 0;
    double total_rate_first = 0.0; // catalog total before the first event
};

// <pi_T,H> - <pi_0,H> - int_0^T L<pi_s,H> ds; a mean-zero martingale under
// the simulated dynamics, evaluated at the final sample time.
double dynkin_residual(const TrajectoryRecord& traj, size_t observable);

struct Event {
    enum class Kind { bulk, left, right };
    Kind kind;
    // bond index for bulk, target window mask for replacements
    uint32_t index;
    double rate;
};

class Simulator {
public:
    explicit Simulator(SimConfig cfg);

    const SimConfig& config() const { return cfg_; }

    TrajectoryRecord run(Rng& rng);

    // Testing surface: the current catalog and one hand-stepped transition.
    void reset(Rng& rng);
    void set_configuration(const Configuration& c);
    const Configuration& configuration() const { return conf_; }
    std::vector<Event> catalog() const;
    double total_rate() const { return tree_.total(); }
    // Samples a waiting time and an event, applies it, returns both.
    std::pair<double, Event> step(Rng& rng);

private:
    void build_catalog(double t);
    void refresh_bond(int bond);
    void refresh_window(Side s);
    void apply_event(size_t slot);
    double tilt_exponent_bulk(int bond) const;
    void validate_against_scratch();

    size_t bond_slot(int bond) const { return size_t(bond - 1); }
    size_t window_slot(Side s, uint32_t to) const;

    SimConfig cfg_;
    int N_, l_;
    double time_ = 0.0;
    bool tilt_static_ = true; // no tilt or time-constant tilt
    Configuration conf_;
    WeightTree tree_;

    // Tilt data at the current catalog time.
    std::vector<double> tilt_site_;  // G(t, x_site), sites 1..N-1
    std::vector<double> bulk_kappa_; // N/(N-1) * (G(x_{b+1}) - G(x_b)) per bond

    // Per-observable site values and incremental generator sums.
    std::vector<std::vector<double>> obs_site_;   // [obs][site-1]
    std::vector<std::vector<double>> bond_contrib_; // [obs][bond-1]
    std::vector<double> bulk_gen_;                // sum over bonds rate*delta
    std::vector<double> wind_gen_left_, wind_gen_right_; // current window rows
    std::vector<NeumaierSum> gen_acc_;
    uint64_t events_since_rebuild_ = 0;
};

TrajectoryRecord simulate(const SimConfig& cfg, Rng& rng);

} // namespace exc
