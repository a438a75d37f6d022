#pragma once

#include <string>

#include "fisherkin/density.hpp"

namespace fisherkin {

// Density file format: a JSON sidecar header `<base>.fkh` with fields
// {d, n_particles, m, period, dtype:"f64", order:"row-major"} and a raw
// payload `<base>.fkd` of little-endian 64-bit floats in grid order.

// `base` may be given with or without the .fkh/.fkd extension.
void save_density(const Density& mu, const std::string& base);

// Loads and validates (invariants included); throws format_error on any
// inconsistency.
Density load_density(const std::string& base);

} // namespace fisherkin
