#include "exc/rate_model.hpp"

#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "exc/rng.hpp"

namespace exc {

BoundaryRateTable::BoundaryRateTable(int l) : l_(l) {
    if (l < 1 || l > max_window)
        throw std::invalid_argument("window size must be in [1, 16]");
    rates_.assign(size_t(states()) * states(), 0.0);
}

void BoundaryRateTable::set_rate(uint32_t from, uint32_t to, double r) {
    if (from >= states() || to >= states())
        throw std::invalid_argument("window state mask out of range");
    if (!(r >= 0.0) || !std::isfinite(r))
        throw std::invalid_argument("replacement rate must be finite and >= 0");
    if (from == to) return;
    rates_[size_t(from) * states() + to] = r;
}

double BoundaryRateTable::row_total(uint32_t from) const {
    double s = 0.0;
    for (uint32_t to = 0; to < states(); ++to) s += rate(from, to);
    return s;
}

RateModel make_model(BoundaryRateTable left, BoundaryRateTable right) {
    if (left.window_size() != right.window_size())
        throw std::invalid_argument("both windows must have the same size");
    return RateModel{std::move(left), std::move(right)};
}

RateModel build_l3(double a, double b, double a2) {
    if (!(a > 0.0) || !(a < b))
        throw std::invalid_argument("build_l3 requires 0 < a < b");
    if (a2 < 0.0) a2 = a + 2.0 * b;
    if (a2 < a + 2.0 * b)
        throw std::invalid_argument("build_l3 requires a2 >= a + 2b");
    const double a1 = a;
    const double a0 = 2.0 * a2 + 4.0 * b - a;

    BoundaryRateTable t(3);
    for (uint32_t w = 0; w < 8; ++w) {
        const int outer = w & 1, mid = (w >> 1) & 1, inner = (w >> 2) & 1;
        double rate;
        if (outer != inner)
            rate = a2;
        else if (mid == outer)
            rate = a1;
        else
            rate = a0;
        t.set_rate(w, w ^ 0b010u, rate);
    }
    return RateModel{t, t};
}

RateModel build_l1(double rho_minus, double rho_plus, double lambda_minus,
                   double lambda_plus) {
    if (!(rho_minus > 0.0 && rho_minus < 1.0 && rho_plus > 0.0 && rho_plus < 1.0))
        throw std::invalid_argument("reservoir densities must lie in (0,1)");
    if (!(lambda_minus > 0.0 && lambda_plus > 0.0))
        throw std::invalid_argument("reservoir speeds must be positive");
    BoundaryRateTable left(1), right(1);
    left.set_rate(0, 1, lambda_minus * rho_minus);
    left.set_rate(1, 0, lambda_minus * (1.0 - rho_minus));
    right.set_rate(0, 1, lambda_plus * rho_plus);
    right.set_rate(1, 0, lambda_plus * (1.0 - rho_plus));
    return RateModel{std::move(left), std::move(right)};
}

namespace {

// Forward or reverse reachability from `start` over replacement edges plus
// adjacent-site swaps.
std::vector<char> reachable(const BoundaryRateTable& t, uint32_t start, bool reverse) {
    const uint32_t n = t.states();
    const int l = t.window_size();
    std::vector<char> seen(n, 0);
    std::vector<uint32_t> stack{start};
    seen[start] = 1;
    while (!stack.empty()) {
        uint32_t u = stack.back();
        stack.pop_back();
        auto visit = [&](uint32_t v) {
            if (!seen[v]) {
                seen[v] = 1;
                stack.push_back(v);
            }
        };
        for (uint32_t v = 0; v < n; ++v) {
            double r = reverse ? t.rate(v, u) : t.rate(u, v);
            if (r > 0.0) visit(v);
        }
        for (int i = 0; i + 1 < l; ++i) {
            uint32_t lo = (u >> i) & 1, hi = (u >> (i + 1)) & 1;
            if (lo != hi) visit(u ^ (0b11u << i)); // swap is its own reverse
        }
    }
    return seen;
}

} // namespace

IrreducibilityReport validate_irreducibility(const BoundaryRateTable& table) {
    auto fwd = reachable(table, 0, false);
    for (uint32_t v = 0; v < table.states(); ++v)
        if (!fwd[v]) return {false, 0, v};
    auto bwd = reachable(table, 0, true);
    for (uint32_t v = 0; v < table.states(); ++v)
        if (!bwd[v]) return {false, v, 0};
    return {true, 0, 0};
}

RateModel random_irreducible_model(int l, uint64_t seed, double density) {
    auto draw = [&](uint64_t stream) {
        BoundaryRateTable t(l);
        Rng rng(seed, stream);
        for (uint32_t from = 0; from < t.states(); ++from)
            for (uint32_t to = 0; to < t.states(); ++to) {
                if (from == to) continue;
                if (rng.bernoulli(density))
                    t.set_rate(from, to, 0.2 + rng.uniform01());
            }
        return t;
    };
    uint64_t stream = 0;
    BoundaryRateTable left = draw(stream);
    while (!validate_irreducibility(left).irreducible) left = draw(++stream);
    BoundaryRateTable right = draw(++stream);
    while (!validate_irreducibility(right).irreducible) right = draw(++stream);
    return RateModel{std::move(left), std::move(right)};
}

std::vector<std::pair<Side, BoundaryRateTable>> parse_rate_tables(std::istream& in) {
    std::vector<std::pair<Side, BoundaryRateTable>> out;

    struct Pending {
        bool active = false;
        bool have_side = false, have_l = false;
        Side side = Side::left;
        int l = 0;
        std::vector<std::array<double, 3>> entries;
    } cur;

    auto flush = [&] {
        if (!cur.active) return;
        if (!cur.have_side || !cur.have_l)
            throw std::runtime_error("rate table section is missing side or l");
        BoundaryRateTable t(cur.l);
        for (auto& e : cur.entries) {
            auto from = uint32_t(e[0]), to = uint32_t(e[1]);
            if (e[0] != from || e[1] != to || from >= t.states() || to >= t.states())
                throw std::runtime_error("rate table mask out of range for l");
            if (from == to)
                throw std::runtime_error("rate table entry on the diagonal");
            t.set_rate(from, to, e[2]);
        }
        out.emplace_back(cur.side, std::move(t));
        cur = Pending{};
    };

    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto pos = line.find('#'); pos != std::string::npos) line.erase(pos);
        std::istringstream ls(line);
        std::string first;
        if (!(ls >> first)) continue;
        auto fail = [&](const std::string& why) {
            throw std::runtime_error("rate table line " + std::to_string(lineno) + ": " + why);
        };
        if (first == "side") {
            std::string which;
            if (!(ls >> which)) fail("expected 'left' or 'right'");
            if (cur.have_side) flush();
            cur.active = cur.have_side = true;
            if (which == "left")
                cur.side = Side::left;
            else if (which == "right")
                cur.side = Side::right;
            else
                fail("unknown side '" + which + "'");
        } else if (first == "l") {
            int l;
            if (!(ls >> l)) fail("expected window size");
            cur.active = cur.have_l = true;
            cur.l = l;
        } else {
            double from, to, rate;
            std::istringstream entry(line);
            if (!(entry >> from >> to >> rate)) fail("expected '<from> <to> <rate>'");
            if (!cur.have_l) fail("entry before 'l' header");
            cur.active = true;
            cur.entries.push_back({from, to, rate});
        }
    }
    flush();
    return out;
}

RateModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open rate table file: " + path);
    auto tables = parse_rate_tables(in);
    const BoundaryRateTable *left = nullptr, *right = nullptr;
    for (auto& [side, t] : tables)
        (side == Side::left ? left : right) = &t;
    if (tables.size() != 2 || !left || !right)
        throw std::runtime_error(path + ": expected exactly one left and one right table");
    return make_model(*left, *right);
}

void save_model(const RateModel& model, std::ostream& out) {
    for (Side side : {Side::left, Side::right}) {
        const auto& t = model.table(side);
        out << "side " << side_name(side) << "\n";
        out << "l " << t.window_size() << "\n";
        for (uint32_t from = 0; from < t.states(); ++from)
            for (uint32_t to = 0; to < t.states(); ++to)
                if (t.rate(from, to) > 0.0) {
                    char buf[48];
                    std::snprintf(buf, sizeof buf, "%u %u %.17g\n", from, to,
                                  t.rate(from, to));
                    out << buf;
                }
    }
}

uint64_t model_hash(const RateModel& model) {
    uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&](uint64_t v) {
        for (int i = 0; i < 8; ++i) {
            h ^= (v >> (8 * i)) & 0xff;
            h *= 0x100000001b3ULL;
        }
    };
    mix(uint64_t(model.window_size()));
    for (Side side : {Side::left, Side::right}) {
        const auto& t = model.table(side);
        for (uint32_t from = 0; from < t.states(); ++from)
            for (uint32_t to = 0; to < t.states(); ++to) {
                double r = t.rate(from, to);
                uint64_t bits;
                static_assert(sizeof bits == sizeof r);
                std::memcpy(&bits, &r, sizeof bits);
                mix(bits);
            }
    }
    return h;
}

} // namespace exc
