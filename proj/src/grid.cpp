#include "exc/grid.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>
#include <stdexcept>

#include <json.hpp>

#include "exc/numeric.hpp"

namespace exc {

Grid::Grid(int n_) : n(n_) {
    if (n < 8) throw std::invalid_argument("grid needs at least 8 cells");
}

DensityField::DensityField(Grid grid, double snap_dt, uint64_t model_hash)
    : grid_(grid), snap_dt_(snap_dt), model_hash_(model_hash) {
    if (!(snap_dt > 0.0)) throw std::invalid_argument("snapshot spacing must be positive");
}

void DensityField::push_snapshot(std::vector<double> v) {
    if (int(v.size()) != grid_.nodes())
        throw std::invalid_argument("snapshot size does not match the grid");
    snaps_.push_back(std::move(v));
}

std::vector<double> DensityField::at_time(double t) const {
    if (snaps_.empty()) throw std::logic_error("empty field");
    if (snaps_.size() == 1) return snaps_[0];
    double pos = std::clamp(t / snap_dt_, 0.0, double(snaps_.size() - 1));
    size_t k = std::min(size_t(pos), snaps_.size() - 2);
    double w = pos - double(k);
    std::vector<double> out(snaps_[k].size());
    for (size_t i = 0; i < out.size(); ++i)
        out[i] = (1.0 - w) * snaps_[k][i] + w * snaps_[k + 1][i];
    return out;
}

double DensityField::min_value() const {
    double m = snaps_.at(0).at(0);
    for (const auto& s : snaps_)
        for (double v : s) m = std::min(m, v);
    return m;
}

double DensityField::max_value() const {
    double m = snaps_.at(0).at(0);
    for (const auto& s : snaps_)
        for (double v : s) m = std::max(m, v);
    return m;
}

void save_field_csv(const DensityField& field, std::ostream& out) {
    out << "t,x,rho\n";
    for (size_t k = 0; k < field.snapshots(); ++k) {
        std::string t = format_double(field.time(k));
        for (int i = 0; i <= field.grid().n; ++i)
            out << t << ',' << format_double(field.grid().x(i)) << ','
                << format_double(field.value(k, i)) << '\n';
    }
}

void save_field_binary(const DensityField& field, const std::string& path) {
    nlohmann::json header = {
        {"n", field.grid().n},
        {"snap_dt", field.snap_dt()},
        {"snapshots", field.snapshots()},
        {"model_hash", field.model_hash()},
    };
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << header.dump() << '\n';
    for (size_t k = 0; k < field.snapshots(); ++k)
        out.write(reinterpret_cast<const char*>(field.snapshot(k).data()),
                  std::streamsize(field.snapshot(k).size() * sizeof(double)));
    if (!out) throw std::runtime_error("short write to " + path);
}

DensityField load_field_binary(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("missing header in " + path);
    nlohmann::json header = nlohmann::json::parse(line);

    Grid grid(header.at("n").get<int>());
    DensityField field(grid, header.at("snap_dt").get<double>(),
                       header.at("model_hash").get<uint64_t>());
    size_t count = header.at("snapshots").get<size_t>();
    for (size_t k = 0; k < count; ++k) {
        std::vector<double> snap(size_t(grid.nodes()));
        in.read(reinterpret_cast<char*>(snap.data()),
                std::streamsize(snap.size() * sizeof(double)));
        if (!in) throw std::runtime_error("truncated field data in " + path);
        field.push_snapshot(std::move(snap));
    }
    return field;
}

} // namespace exc
