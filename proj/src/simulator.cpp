#include "exc/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace exc {

Simulator::Simulator(SimConfig cfg)
    : cfg_(std::move(cfg)),
      N_(cfg_.N),
      l_(cfg_.model.window_size()),
      conf_(cfg_.N, cfg_.model.window_size()),
      tree_(size_t(cfg_.N - 2) + 2 * (size_t(1) << cfg_.model.window_size())) {
    // T = 0 is legal and yields the single t = 0 sample
    if (!(cfg_.T >= 0.0))
        throw std::invalid_argument("horizon must be nonnegative");
    if (cfg_.observables.empty())
        throw std::invalid_argument("need at least one observable");

    for (double s : cfg_.sample_times)
        if (!(s >= 0.0 && s <= cfg_.T))
            throw std::invalid_argument("sample time outside [0, T]");
    std::sort(cfg_.sample_times.begin(), cfg_.sample_times.end());
    cfg_.sample_times.erase(
        std::unique(cfg_.sample_times.begin(), cfg_.sample_times.end()),
        cfg_.sample_times.end());
    if (cfg_.sample_times.empty() || cfg_.sample_times.back() != cfg_.T)
        cfg_.sample_times.push_back(cfg_.T);

    if (cfg_.tilt) {
        if (cfg_.tilt->horizon() < cfg_.T)
            throw std::invalid_argument("tilt horizon shorter than the run");
        tilt_static_ = cfg_.tilt->time_constant();
        double bound = cfg_.tilt->sup_bound();
        double worst_exponent =
            double(std::max(l_, 2)) * bound * double(N_) / double(N_ - 1);
        if (worst_exponent > BoundaryMoments::exponent_cap)
            throw std::domain_error("tilt strength exceeds the exponent cap");
    }

    obs_site_.resize(cfg_.observables.size());
    for (size_t o = 0; o < cfg_.observables.size(); ++o) {
        obs_site_[o].resize(size_t(N_ - 1));
        for (int site = 1; site <= N_ - 1; ++site)
            obs_site_[o][size_t(site - 1)] =
                cfg_.observables[o].f(double(site) / N_);
    }
    bond_contrib_.assign(cfg_.observables.size(),
                         std::vector<double>(size_t(N_ - 2), 0.0));
    bulk_gen_.assign(cfg_.observables.size(), 0.0);
    wind_gen_left_.assign(cfg_.observables.size(), 0.0);
    wind_gen_right_.assign(cfg_.observables.size(), 0.0);
}

size_t Simulator::window_slot(Side s, uint32_t to) const {
    size_t base = size_t(N_ - 2);
    if (s == Side::right) base += size_t(1) << l_;
    return base + to;
}

double Simulator::tilt_exponent_bulk(int bond) const {
    return bulk_kappa_.empty() ? 0.0 : bulk_kappa_[size_t(bond - 1)];
}

void Simulator::refresh_bond(int bond) {
    double rate = 0.0;
    int dir = 0;
    if (conf_.discrepant(bond)) {
        dir = conf_.occ(bond) == 1 ? +1 : -1; // particle hops right / left
        double kappa = tilt_exponent_bulk(bond);
        rate = double(N_) * double(N_);
        if (kappa != 0.0) rate *= std::exp(dir * kappa);
    }
    tree_.set(bond_slot(bond), rate);
    for (size_t o = 0; o < bulk_gen_.size(); ++o) {
        double contrib = 0.0;
        if (rate > 0.0) {
            double dH = (obs_site_[o][size_t(bond)] - obs_site_[o][size_t(bond - 1)]) /
                        double(N_ - 1);
            contrib = rate * dir * dH;
        }
        bulk_gen_[o] += contrib - bond_contrib_[o][size_t(bond - 1)];
        bond_contrib_[o][size_t(bond - 1)] = contrib;
    }
}

void Simulator::refresh_window(Side s) {
    const auto& table = cfg_.model.table(s);
    const uint32_t w = conf_.window_state(s);
    auto& gen = (s == Side::left) ? wind_gen_left_ : wind_gen_right_;
    std::fill(gen.begin(), gen.end(), 0.0);

    for (uint32_t to = 0; to < table.states(); ++to) {
        double rate = 0.0;
        if (to != w) {
            rate = double(N_) * table.rate(w, to);
            if (rate > 0.0 && !tilt_site_.empty()) {
                double sum = 0.0;
                for (int bit = 0; bit < l_; ++bit) {
                    int delta = int((to >> bit) & 1u) - int((w >> bit) & 1u);
                    if (delta != 0)
                        sum += delta *
                               tilt_site_[size_t(conf_.window_site(s, bit) - 1)];
                }
                if (sum != 0.0)
                    rate *= std::exp(double(N_) / double(N_ - 1) * sum);
            }
        }
        tree_.set(window_slot(s, to), rate);
        if (rate > 0.0) {
            for (size_t o = 0; o < gen.size(); ++o) {
                double dH = 0.0;
                for (int bit = 0; bit < l_; ++bit) {
                    int delta = int((to >> bit) & 1u) - int((w >> bit) & 1u);
                    if (delta != 0)
                        dH += delta *
                              obs_site_[o][size_t(conf_.window_site(s, bit) - 1)];
                }
                gen[o] += rate * dH / double(N_ - 1);
            }
        }
    }
}

void Simulator::build_catalog(double t) {
    if (cfg_.tilt) {
        auto d = cfg_.tilt->collapse_time(t);
        tilt_site_.resize(size_t(N_ - 1));
        for (int site = 1; site <= N_ - 1; ++site)
            tilt_site_[size_t(site - 1)] =
                cfg_.tilt->slice_value(d, double(site) / N_);
        bulk_kappa_.resize(size_t(N_ - 2));
        for (int bond = 1; bond <= N_ - 2; ++bond)
            bulk_kappa_[size_t(bond - 1)] =
                double(N_) / double(N_ - 1) *
                (tilt_site_[size_t(bond)] - tilt_site_[size_t(bond - 1)]);
    }
    for (auto& row : bond_contrib_) std::fill(row.begin(), row.end(), 0.0);
    std::fill(bulk_gen_.begin(), bulk_gen_.end(), 0.0);
    for (int bond = 1; bond <= N_ - 2; ++bond) refresh_bond(bond);
    refresh_window(Side::left);
    refresh_window(Side::right);
    tree_.rebuild();
}

void Simulator::reset(Rng& rng) {
    conf_ = Configuration::bernoulli(N_, l_, cfg_.gamma, rng);
    time_ = 0.0;
    events_since_rebuild_ = 0;
    gen_acc_.assign(cfg_.observables.size(), NeumaierSum{});
    build_catalog(0.0);
}

void Simulator::set_configuration(const Configuration& c) {
    if (c.N() != N_ || c.window_size() != l_)
        throw std::invalid_argument("configuration shape mismatch");
    conf_ = c;
    time_ = 0.0;
    events_since_rebuild_ = 0;
    gen_acc_.assign(cfg_.observables.size(), NeumaierSum{});
    build_catalog(0.0);
}

std::vector<Event> Simulator::catalog() const {
    std::vector<Event> out;
    for (int bond = 1; bond <= N_ - 2; ++bond) {
        double r = tree_.leaf(bond_slot(bond));
        if (r > 0.0) out.push_back({Event::Kind::bulk, uint32_t(bond), r});
    }
    for (Side s : {Side::left, Side::right})
        for (uint32_t to = 0; to < (1u << l_); ++to) {
            double r = tree_.leaf(window_slot(s, to));
            if (r > 0.0)
                out.push_back({s == Side::left ? Event::Kind::left : Event::Kind::right,
                               to, r});
        }
    return out;
}

void Simulator::apply_event(size_t slot) {
    const size_t nb = size_t(N_ - 2);
    if (slot < nb) {
        int bond = int(slot) + 1;
        conf_.apply_swap(bond);
        for (int b = std::max(1, bond - 1); b <= std::min(N_ - 2, bond + 1); ++b)
            refresh_bond(b);
        if (bond <= l_) refresh_window(Side::left);
        if (bond >= N_ - l_ - 1) refresh_window(Side::right);
    } else {
        Side s = (slot < nb + (size_t(1) << l_)) ? Side::left : Side::right;
        uint32_t to = uint32_t(slot - nb - (s == Side::right ? (size_t(1) << l_) : 0));
        conf_.apply_replacement(s, to);
        if (s == Side::left) {
            for (int b = 1; b <= std::min(N_ - 2, l_); ++b) refresh_bond(b);
        } else {
            for (int b = std::max(1, N_ - l_ - 1); b <= N_ - 2; ++b) refresh_bond(b);
        }
        refresh_window(s);
    }
}

void Simulator::validate_against_scratch() {
    std::vector<double> leaves(tree_.size());
    for (size_t i = 0; i < tree_.size(); ++i) leaves[i] = tree_.leaf(i);
    std::vector<double> bulk = bulk_gen_, wl = wind_gen_left_, wr = wind_gen_right_;

    build_catalog(time_);

    for (size_t i = 0; i < tree_.size(); ++i)
        if (leaves[i] != tree_.leaf(i))
            throw std::logic_error("incremental catalog diverged from scratch rebuild");
    auto close = [](double x, double y) {
        return std::abs(x - y) <= 1e-9 * (1.0 + std::max(std::abs(x), std::abs(y)));
    };
    for (size_t o = 0; o < bulk.size(); ++o)
        if (!close(bulk[o], bulk_gen_[o]) || !close(wl[o], wind_gen_left_[o]) ||
            !close(wr[o], wind_gen_right_[o]))
            throw std::logic_error("incremental generator sums diverged");
}

std::pair<double, Event> Simulator::step(Rng& rng) {
    double total = tree_.total();
    if (!(total > 0.0))
        throw std::runtime_error("no available transitions (absorbing configuration)");
    double dt = rng.exponential(total);
    size_t slot = tree_.sample(rng.uniform01_open_below() * total);

    Event ev{};
    const size_t nb = size_t(N_ - 2);
    if (slot < nb)
        ev = {Event::Kind::bulk, uint32_t(slot) + 1, tree_.leaf(slot)};
    else if (slot < nb + (size_t(1) << l_))
        ev = {Event::Kind::left, uint32_t(slot - nb), tree_.leaf(slot)};
    else
        ev = {Event::Kind::right, uint32_t(slot - nb - (size_t(1) << l_)),
              tree_.leaf(slot)};

    time_ += dt;
    apply_event(slot);
    if (!tilt_static_) build_catalog(time_);
    if (cfg_.validate_incremental) validate_against_scratch();
    return {dt, ev};
}

TrajectoryRecord Simulator::run(Rng& rng) {
    reset(rng);

    TrajectoryRecord out;
    out.times = cfg_.sample_times;
    for (const auto& obs : cfg_.observables) out.observable_ids.push_back(obs.id);
    out.values.assign(out.times.size(), {});
    out.gen_integral.assign(out.times.size(), {});
    out.total_rate_first = tree_.total();

    auto values_now = [&] {
        std::vector<double> v(cfg_.observables.size());
        for (size_t o = 0; o < v.size(); ++o) {
            NeumaierSum s;
            for (int site = 1; site <= N_ - 1; ++site)
                if (conf_.occ(site)) s.add(obs_site_[o][size_t(site - 1)]);
            v[o] = s.value() / double(N_ - 1);
        }
        return v;
    };
    out.initial_values = values_now();

    double mark = 0.0; // accumulators are advanced through this time
    auto advance_acc = [&](double upto) {
        double span = upto - mark;
        if (span > 0.0) {
            for (size_t o = 0; o < gen_acc_.size(); ++o)
                gen_acc_[o].add(span * (bulk_gen_[o] + wind_gen_left_[o] +
                                        wind_gen_right_[o]));
            mark = upto;
        }
    };
    auto snapshot = [&](size_t si) {
        out.values[si] = values_now();
        out.gen_integral[si].resize(gen_acc_.size());
        for (size_t o = 0; o < gen_acc_.size(); ++o)
            out.gen_integral[si][o] = gen_acc_[o].value();
        if (cfg_.store_configs) out.configs.push_back(conf_);
    };

    size_t si = 0;
    for (;;) {
        double total = tree_.total();
        if (!(total > 0.0))
            throw std::runtime_error("no available transitions (absorbing configuration)");
        double te = time_ + rng.exponential(total);
        double cap = std::min(te, cfg_.T);
        while (si < out.times.size() && out.times[si] <= cap) {
            advance_acc(out.times[si]);
            snapshot(si);
            ++si;
        }
        if (te >= cfg_.T) {
            advance_acc(cfg_.T);
            break;
        }
        advance_acc(te);
        time_ = te;

        size_t slot = tree_.sample(rng.uniform01_open_below() * total);
        const size_t nb = size_t(N_ - 2);
        if (slot < nb)
            ++out.bulk_events;
        else if (slot < nb + (size_t(1) << l_))
            ++out.left_events;
        else
            ++out.right_events;

        apply_event(slot);
        if (!tilt_static_) build_catalog(time_);
        if (cfg_.validate_incremental) validate_against_scratch();
        if (++events_since_rebuild_ >= 8192) {
            build_catalog(time_);
            events_since_rebuild_ = 0;
        }
    }
    return out;
}

double dynkin_residual(const TrajectoryRecord& traj, size_t observable) {
    if (traj.values.empty() || observable >= traj.observable_ids.size())
        throw std::invalid_argument("trajectory lacks the requested observable");
    return traj.values.back()[observable] - traj.initial_values[observable] -
           traj.gen_integral.back()[observable];
}

TrajectoryRecord simulate(const SimConfig& cfg, Rng& rng) {
    Simulator sim(cfg);
    return sim.run(rng);
}

} // namespace exc
