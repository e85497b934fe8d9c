#include "exc/profile.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace exc {

double SpaceProfile::operator()(double x) const {
    switch (kind) {
        case Kind::constant: return a;
        case Kind::affine: return a + b * x;
        case Kind::cosine: return a + b * std::cos(k * std::numbers::pi * x);
        case Kind::sine: return a + b * std::sin(k * std::numbers::pi * x);
        case Kind::power: return a * std::pow(x, k);
    }
    return 0.0;
}

SpaceProfile SpaceProfile::constant(double c) { return {Kind::constant, c, 0.0, 1}; }
SpaceProfile SpaceProfile::affine(double a0, double slope) {
    return {Kind::affine, a0, slope, 1};
}
SpaceProfile SpaceProfile::cosine(double mean, double amp, int mode) {
    return {Kind::cosine, mean, amp, mode};
}
SpaceProfile SpaceProfile::sine(double mean, double amp, int mode) {
    return {Kind::sine, mean, amp, mode};
}
SpaceProfile SpaceProfile::power(double coeff, int exponent) {
    return {Kind::power, coeff, 0.0, exponent};
}

namespace {
const char* kind_name(SpaceProfile::Kind k) {
    switch (k) {
        case SpaceProfile::Kind::constant: return "constant";
        case SpaceProfile::Kind::affine: return "affine";
        case SpaceProfile::Kind::cosine: return "cosine";
        case SpaceProfile::Kind::sine: return "sine";
        case SpaceProfile::Kind::power: return "power";
    }
    return "?";
}
} // namespace

nlohmann::json SpaceProfile::to_json() const {
    return {{"kind", kind_name(kind)}, {"a", a}, {"b", b}, {"k", k}};
}

SpaceProfile SpaceProfile::from_json(const nlohmann::json& j) {
    std::string kind = j.at("kind").get<std::string>();
    SpaceProfile p;
    if (kind == "constant")
        p.kind = Kind::constant;
    else if (kind == "affine")
        p.kind = Kind::affine;
    else if (kind == "cosine")
        p.kind = Kind::cosine;
    else if (kind == "sine")
        p.kind = Kind::sine;
    else if (kind == "power")
        p.kind = Kind::power;
    else
        throw std::invalid_argument("unknown profile kind: " + kind);
    p.a = j.value("a", 0.0);
    p.b = j.value("b", 0.0);
    p.k = j.value("k", 1);
    return p;
}

std::vector<Observable> standard_observables() {
    return {observable_by_name("one"), observable_by_name("x"),
            observable_by_name("cospix"), observable_by_name("x2")};
}

Observable observable_by_name(const std::string& name) {
    if (name == "one") return {"one", SpaceProfile::constant(1.0)};
    if (name == "x") return {"x", SpaceProfile::affine(0.0, 1.0)};
    if (name == "x2") return {"x2", SpaceProfile::power(1.0, 2)};
    if (name == "cospix") return {"cospix", SpaceProfile::cosine(0.0, 1.0, 1)};
    throw std::invalid_argument("unknown observable: " + name);
}

} // namespace exc
