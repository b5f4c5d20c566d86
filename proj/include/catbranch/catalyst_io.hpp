#pragma once

#include <json.hpp>
#include <string>
#include <variant>

#include "catbranch/catalyst.hpp"

namespace catbranch {

using AnyCatalyst = std::variant<AtomicCatalyst, LayeredCatalyst, DensityCatalyst, LatticeCatalyst>;

struct JsonOptions {
    /// Write every binary64 as a C99 hex-float string ("0x1.8p-1") so the
    /// round trip is bit-exact.
    bool hex_floats = false;
};

/// {kind, params, atoms | layers | lattice values}.
nlohmann::json to_json(const AnyCatalyst& cat, const JsonOptions& opts = {});
/// Accepts plain numbers and hex-float strings interchangeably.
AnyCatalyst catalyst_from_json(const nlohmann::json& doc);

std::string hex_float(double x);
double parse_float(const nlohmann::json& v);

}  // namespace catbranch
