#include "exc/exact_law.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace exc {

namespace {

struct TransitionTable {
    std::vector<size_t> offset;   // per state, into targets/rates
    std::vector<uint32_t> target;
    std::vector<double> rate;
    std::vector<double> out_rate; // exit rate per state
};

TransitionTable build_transitions(const RateModel& model, int N,
                                  const std::vector<double>& tilt_site) {
    const int n = N - 1;
    const int l = model.window_size();
    const uint32_t S = 1u << n;
    const uint32_t lmask = (1u << l) - 1u;
    const double bulk = double(N) * double(N);
    const bool tilted = !tilt_site.empty();
    const double theta = double(N) / double(N - 1);

    TransitionTable t;
    t.offset.reserve(S + 1);
    t.out_rate.assign(S, 0.0);
    t.offset.push_back(0);

    for (uint32_t s = 0; s < S; ++s) {
        double out = 0.0;
        int disc = 0;
        for (int b = 1; b <= N - 2; ++b) {
            uint32_t pair = (s >> (b - 1)) & 3u;
            if (pair == 1u || pair == 2u) {
                ++disc;
                double r = bulk;
                if (tilted) {
                    // pair==1: site b occupied, hop right; pair==2: hop left.
                    int dir = pair == 1u ? +1 : -1;
                    r *= std::exp(dir * theta *
                                  (tilt_site[size_t(b)] - tilt_site[size_t(b - 1)]));
                }
                t.target.push_back(s ^ (3u << (b - 1)));
                t.rate.push_back(r);
                out += r;
            }
        }
        uint32_t wl = s & lmask;
        for (uint32_t to = 0; to < (1u << l); ++to) {
            double r = model.table(Side::left).rate(wl, to);
            if (to != wl && r > 0.0) {
                r *= N;
                if (tilted) {
                    double sum = 0.0;
                    for (int i = 0; i < l; ++i)
                        sum += (int((to >> i) & 1u) - int((wl >> i) & 1u)) *
                               tilt_site[size_t(i)];
                    r *= std::exp(theta * sum);
                }
                t.target.push_back((s & ~lmask) | to);
                t.rate.push_back(r);
                out += r;
            }
        }
        uint32_t wr = 0;
        for (int i = 0; i < l; ++i) wr |= ((s >> (n - 1 - i)) & 1u) << i;
        for (uint32_t to = 0; to < (1u << l); ++to) {
            double r = model.table(Side::right).rate(wr, to);
            if (to != wr && r > 0.0) {
                r *= N;
                if (tilted) {
                    double sum = 0.0;
                    for (int i = 0; i < l; ++i)
                        sum += (int((to >> i) & 1u) - int((wr >> i) & 1u)) *
                               tilt_site[size_t(n - 1 - i)];
                    r *= std::exp(theta * sum);
                }
                uint32_t s2 = s;
                for (int i = 0; i < l; ++i) {
                    uint32_t bit = 1u << (n - 1 - i);
                    if ((to >> i) & 1u) s2 |= bit; else s2 &= ~bit;
                }
                t.target.push_back(s2);
                t.rate.push_back(r);
                out += r;
            }
        }
        t.out_rate[s] = out;
        t.offset.push_back(t.target.size());

        // Generator row sum must vanish: exit rate == sum of transition
        // rates, recomputed here from the tables' row totals. The tilted
        // rates have no closed row total, so the check is untilted only.
        if (!tilted) {
            double check = bulk * disc +
                           N * model.table(Side::left).row_total(wl) +
                           N * model.table(Side::right).row_total(wr);
            if (std::abs(check - out) > 1e-12 * std::max(1.0, out))
                throw std::logic_error("generator row sum failed to vanish");
        }
    }
    return t;
}

} // namespace

std::vector<double> exact_law_small_N(const RateModel& model, int N,
                                      const SpaceProfile& gamma, double T,
                                      const std::vector<Observable>& battery,
                                      const ExactLawOptions& opts) {
    const int n = N - 1;
    const int l = model.window_size();
    if (n > 14) throw std::invalid_argument("state space too large (N-1 > 14)");
    if (n < 2 * l + 1)
        throw std::invalid_argument("lattice too short for disjoint windows");
    if (!(T >= 0.0)) throw std::invalid_argument("horizon must be nonnegative");
    if (!(opts.lambda_scale >= 1.0))
        throw std::invalid_argument("lambda_scale must be >= 1");

    std::vector<double> tilt_site;
    if (opts.tilt) {
        if (!opts.tilt->time_constant())
            throw std::invalid_argument(
                "exact law supports time-constant tilts only");
        auto d = opts.tilt->collapse_time(0.0);
        tilt_site.resize(size_t(n));
        for (int site = 1; site <= n; ++site)
            tilt_site[size_t(site - 1)] =
                opts.tilt->slice_value(d, double(site) / N);
    }

    const uint32_t S = 1u << n;
    TransitionTable trans = build_transitions(model, N, tilt_site);

    std::vector<double> v(S);
    for (uint32_t s = 0; s < S; ++s) {
        double p = 1.0;
        for (int i = 0; i < n; ++i) {
            double g = gamma(double(i + 1) / N);
            if (!(g >= 0.0 && g <= 1.0))
                throw std::invalid_argument("initial density outside [0,1]");
            p *= ((s >> i) & 1u) ? g : 1.0 - g;
        }
        v[s] = p;
    }

    double lambda_max = 0.0;
    for (double r : trans.out_rate) lambda_max = std::max(lambda_max, r);
    const double Lambda = opts.lambda_scale * lambda_max;
    const double LT = Lambda * T;
    if (LT > opts.max_lambda_T)
        throw std::overflow_error("uniformization horizon too large");

    // Poisson weights in log space: exp(-LT) underflows past LT ~ 745, and
    // the skipped head of the series is below tail_tol anyway.
    std::vector<double> acc(S, 0.0);
    const double logLT = std::log(std::max(LT, 1e-300));
    double log_pmf = -LT;
    double pmf = std::exp(log_pmf);
    double cum = pmf;
    for (uint32_t s = 0; s < S; ++s) acc[s] = pmf * v[s];

    std::vector<double> next(S);
    for (uint64_t k = 1; cum < 1.0 - opts.tail_tol; ++k) {
        if (k > uint64_t(20.0 * LT) + 2000)
            throw std::runtime_error("uniformization failed to converge");
        // one step of v <- v P with P = I + Q / Lambda
        for (uint32_t s = 0; s < S; ++s)
            next[s] = v[s] * (1.0 - trans.out_rate[s] / Lambda);
        for (uint32_t s = 0; s < S; ++s) {
            double mass = v[s] / Lambda;
            if (mass == 0.0) continue;
            for (size_t e = trans.offset[s]; e < trans.offset[s + 1]; ++e)
                next[trans.target[e]] += mass * trans.rate[e];
        }
        v.swap(next);
        log_pmf += logLT - std::log(double(k));
        pmf = std::exp(log_pmf);
        cum += pmf;
        if (pmf == 0.0) continue;
        for (uint32_t s = 0; s < S; ++s) acc[s] += pmf * v[s];
    }

    std::vector<double> site_val(battery.size() * size_t(n));
    for (size_t o = 0; o < battery.size(); ++o)
        for (int i = 0; i < n; ++i)
            site_val[o * n + i] = battery[o].f(double(i + 1) / N);

    std::vector<double> out(battery.size(), 0.0);
    for (uint32_t s = 0; s < S; ++s) {
        if (acc[s] == 0.0) continue;
        for (size_t o = 0; o < battery.size(); ++o) {
            double h = 0.0;
            for (int i = 0; i < n; ++i)
                if ((s >> i) & 1u) h += site_val[o * n + i];
            out[o] += acc[s] * h / double(n);
        }
    }
    return out;
}

double exact_law_small_N(const RateModel& model, int N,
                         const SpaceProfile& gamma, double T,
                         const SpaceProfile& H, const ExactLawOptions& opts) {
    return exact_law_small_N(model, N, gamma, T, {Observable{"H", H}}, opts)[0];
}

} // namespace exc
