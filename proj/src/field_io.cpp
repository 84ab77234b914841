#include "snse/field_io.hpp"

#include <fstream>

namespace snse {

using nlohmann::json;

json field_to_json(const SpectralField& f, double delta) {
    json j;
    j["schema"] = "snse-field-v1";
    j["N"] = f.lattice->n();
    j["delta"] = delta;
    j["solenoidal"] = f.solenoidal;
    json modes = json::array();
    const auto& lat = *f.lattice;
    for (Eigen::Index idx = 0; idx < lat.size(); ++idx) {
        bool nonzero = false;
        for (int c = 0; c < 3; ++c)
            if (f.c[c][idx] != Complex(0.0, 0.0))
                nonzero = true;
        if (!nonzero)
            continue;
        int a, b, d;
        lat.flat_to_mode(idx, a, b, d);
        modes.push_back(json::array({a, b, d, f.c[0][idx].real(), f.c[0][idx].imag(),
                                     f.c[1][idx].real(), f.c[1][idx].imag(),
                                     f.c[2][idx].real(), f.c[2][idx].imag()}));
    }
    j["modes"] = std::move(modes);
    return j;
}

SpectralField field_from_json(const json& j, double* delta_out) {
    if (j.value("schema", "") != "snse-field-v1")
        throw std::runtime_error("field_from_json: unknown schema");
    const int n = j.at("N").get<int>();
    auto lattice = ModeLattice::make(n);
    SpectralField f(lattice, j.value("solenoidal", false));
    if (delta_out)
        *delta_out = j.value("delta", 0.0);
    for (const auto& row : j.at("modes")) {
        const int a = row.at(0).get<int>();
        const int b = row.at(1).get<int>();
        const int d = row.at(2).get<int>();
        const int h = lattice->half();
        if (std::abs(a) > h || std::abs(b) > h || std::abs(d) > h)
            throw std::runtime_error("field_from_json: mode outside lattice");
        const Eigen::Index idx = lattice->index(a, b, d);
        f.c[0][idx] = Complex(row.at(3).get<double>(), row.at(4).get<double>());
        f.c[1][idx] = Complex(row.at(5).get<double>(), row.at(6).get<double>());
        f.c[2][idx] = Complex(row.at(7).get<double>(), row.at(8).get<double>());
    }
    f.enforce_mean_free();
    return f;
}

void save_field(const SpectralField& f, double delta, const std::string& path) {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot open for writing: " + path);
    out << field_to_json(f, delta).dump() << "\n";
}

SpectralField load_field(const std::string& path, double* delta_out) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open: " + path);
    json j;
    in >> j;
    return field_from_json(j, delta_out);
}

} // namespace snse
