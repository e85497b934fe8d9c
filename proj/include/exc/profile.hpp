#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace exc {

// Closed family of space profiles used for initial data and observables.
// Keeping this a tagged value type (rather than std::function) is what lets
// configs round-trip through JSON and manifests stay self-describing.
struct SpaceProfile {
    enum class Kind { constant, affine, cosine, sine, power };

    Kind kind = Kind::constant;
    double a = 0.0; // constant term / amplitude offset
    double b = 0.0; // slope or amplitude
    int k = 1;      // mode or exponent

    double operator()(double x) const;

    static SpaceProfile constant(double c);
    static SpaceProfile affine(double a0, double slope);
    static SpaceProfile cosine(double mean, double amp, int mode = 1);
    static SpaceProfile sine(double mean, double amp, int mode = 1);
    static SpaceProfile power(double coeff, int exponent);

    nlohmann::json to_json() const;
    static SpaceProfile from_json(const nlohmann::json& j);
};

struct Observable {
    std::string id;
    SpaceProfile f;
};

// The comparison battery: 1, x, cos(pi x), x^2.
std::vector<Observable> standard_observables();
Observable observable_by_name(const std::string& name);

} // namespace exc
