#pragma once

#include <cstdint>
#include <vector>

#include "exc/profile.hpp"
#include "exc/rate_model.hpp"
#include "exc/rng.hpp"

namespace exc {

// Occupation state of the open lattice {1/N, ..., (N-1)/N} with a boundary
// window of l sites at each end. Sites are indexed 1..N-1; bond b joins
// sites b and b+1.
class Configuration {
public:
    Configuration(int N, int l);

    static Configuration bernoulli(int N, int l, const SpaceProfile& gamma,
                                   Rng& rng);

    int N() const { return N_; }
    int sites() const { return N_ - 1; }
    int bonds() const { return N_ - 2; }
    int window_size() const { return l_; }
    double site_x(int site) const { return double(site) / N_; }

    int occ(int site) const { return occ_[size_t(site - 1)]; }
    void set_occ(int site, int v) { occ_[size_t(site - 1)] = uint8_t(v); }

    bool discrepant(int bond) const { return occ(bond) != occ(bond + 1); }

    // Window masks read boundary-site-first: left bit i is site 1+i, right
    // bit i is site N-1-i.
    uint32_t window_state(Side s) const;
    int window_site(Side s, int bit) const {
        return s == Side::left ? 1 + bit : N_ - 1 - bit;
    }

    void apply_swap(int bond);
    void apply_replacement(Side s, uint32_t to);

    int particle_count() const;

    bool operator==(const Configuration&) const = default;

private:
    int N_, l_;
    std::vector<uint8_t> occ_;
};

// (1/(N-1)) sum_x eta(x) H(x), the empirical measure paired with a space
// profile.
double empirical_pair(const Configuration& c, const SpaceProfile& H);

class TestFunction;
double empirical_pair(const Configuration& c, const TestFunction& H, double t);

} // namespace exc
