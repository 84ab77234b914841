#pragma once

#include "snse/field.hpp"

#include <json.hpp>
#include <string>

namespace snse {

// Field snapshot: lattice header {N, delta} plus one (n, u1, u2, u3) row per
// stored nonzero mode. Doubles round-trip exactly through the JSON encoding,
// so save/load is bit-exact.
nlohmann::json field_to_json(const SpectralField& f, double delta);
SpectralField field_from_json(const nlohmann::json& j, double* delta_out = nullptr);

void save_field(const SpectralField& f, double delta, const std::string& path);
SpectralField load_field(const std::string& path, double* delta_out = nullptr);

} // namespace snse
