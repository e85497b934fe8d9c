#include "exc/configuration.hpp"

#include <stdexcept>

#include "exc/test_function.hpp"

namespace exc {

Configuration::Configuration(int N, int l) : N_(N), l_(l) {
    if (l < 1 || l > BoundaryRateTable::max_window)
        throw std::invalid_argument("window size must be in [1, 16]");
    // Windows must be disjoint with at least one bulk-only site between.
    if (N - 1 < 2 * l + 1)
        throw std::invalid_argument("lattice too small: need N-1 >= 2l+1");
    occ_.assign(size_t(N - 1), 0);
}

Configuration Configuration::bernoulli(int N, int l, const SpaceProfile& gamma,
                                       Rng& rng) {
    Configuration c(N, l);
    for (int site = 1; site <= N - 1; ++site) {
        double g = gamma(c.site_x(site));
        if (!(g >= 0.0 && g <= 1.0))
            throw std::invalid_argument("initial profile leaves [0,1]");
        c.set_occ(site, rng.bernoulli(g) ? 1 : 0);
    }
    return c;
}

uint32_t Configuration::window_state(Side s) const {
    uint32_t w = 0;
    for (int bit = 0; bit < l_; ++bit)
        if (occ(window_site(s, bit))) w |= 1u << bit;
    return w;
}

void Configuration::apply_swap(int bond) {
    if (bond < 1 || bond > bonds())
        throw std::invalid_argument("bond index out of range");
    uint8_t tmp = occ_[size_t(bond - 1)];
    occ_[size_t(bond - 1)] = occ_[size_t(bond)];
    occ_[size_t(bond)] = tmp;
}

void Configuration::apply_replacement(Side s, uint32_t to) {
    if (to >= (1u << l_))
        throw std::invalid_argument("window state mask out of range");
    for (int bit = 0; bit < l_; ++bit)
        set_occ(window_site(s, bit), int((to >> bit) & 1u));
}

int Configuration::particle_count() const {
    int n = 0;
    for (uint8_t o : occ_) n += o;
    return n;
}

double empirical_pair(const Configuration& c, const SpaceProfile& H) {
    double s = 0.0;
    for (int site = 1; site <= c.sites(); ++site)
        if (c.occ(site)) s += H(c.site_x(site));
    return s / c.sites();
}

double empirical_pair(const Configuration& c, const TestFunction& H, double t) {
    auto d = H.collapse_time(t);
    double s = 0.0;
    for (int site = 1; site <= c.sites(); ++site)
        if (c.occ(site)) s += H.slice_value(d, c.site_x(site));
    return s / c.sites();
}

} // namespace exc
