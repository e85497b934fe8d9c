#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace exc {

enum class Side { left, right };

inline const char* side_name(Side s) { return s == Side::left ? "left" : "right"; }

// Replacement rates for one boundary window, dense over ordered pairs of
// window states. Bit 0 of a state mask is always the site nearest the
// boundary the window belongs to, so a left/right-symmetric model has equal
// tables on both sides. Rates are per unit macroscopic time, before the
// lattice speed-up.
class BoundaryRateTable {
public:
    static constexpr int max_window = 16; // dense-table memory bound

    // The default is an inert single-site table; real models come from the
    // builders or a parsed rate file.
    BoundaryRateTable() : BoundaryRateTable(1) {}
    explicit BoundaryRateTable(int l);

    int window_size() const { return l_; }
    uint32_t states() const { return 1u << l_; }

    double rate(uint32_t from, uint32_t to) const {
        return rates_[size_t(from) * states() + to];
    }
    // No-op replacements are meaningless; the diagonal is pinned to zero.
    void set_rate(uint32_t from, uint32_t to, double r);

    double row_total(uint32_t from) const;

    bool operator==(const BoundaryRateTable&) const = default;

private:
    int l_;
    std::vector<double> rates_;
};

struct RateModel {
    BoundaryRateTable left;
    BoundaryRateTable right;

    int window_size() const { return left.window_size(); }
    const BoundaryRateTable& table(Side s) const {
        return s == Side::left ? left : right;
    }
};

RateModel make_model(BoundaryRateTable left, BoundaryRateTable right);

// Three-site model with a single move per window state (flip of the middle
// site). Parameters must satisfy 0 < a < b and a2 >= a + 2b; a2 defaults to
// the smallest admissible value.
RateModel build_l3(double a, double b, double a2 = -1.0);

// Single-site linked reservoirs: exchange with virtual densities rho- / rho+
// at speeds lambda- / lambda+. F is affine and strictly decreasing on each
// side, so exactly one stationary profile exists.
RateModel build_l1(double rho_minus, double rho_plus, double lambda_minus = 1.0,
                   double lambda_plus = 1.0);

struct IrreducibilityReport {
    bool irreducible = false;
    // On failure, a concrete unreachable ordered pair of window states.
    uint32_t witness_from = 0;
    uint32_t witness_to = 0;
};

// Strong connectivity of the directed graph on window states whose edges are
// positive-rate replacements plus the always-available swaps of adjacent
// window sites.
IrreducibilityReport validate_irreducibility(const BoundaryRateTable& table);

// Deterministic fixture: rejection-samples sparse tables until both sides
// pass validate_irreducibility.
RateModel random_irreducible_model(int l, uint64_t seed, double density = 0.5);

// Text format, one table per section:
//   side left
//   l 3
//   <from-mask> <to-mask> <rate>
// Masks are decimal; pairs not listed have rate zero; '#' starts a comment.
std::vector<std::pair<Side, BoundaryRateTable>> parse_rate_tables(std::istream& in);
RateModel load_model(const std::string& path);
void save_model(const RateModel& model, std::ostream& out);

// Stable over the entries that define the dynamics; used to stamp binary
// field dumps and manifests.
uint64_t model_hash(const RateModel& model);

} // namespace exc
