#pragma once

#include <string>

#include <json.hpp>

namespace fef {

inline constexpr int kCanonicalDecimals = 6;

// Canonical JSON text: object keys in byte order, no insignificant
// whitespace, integers verbatim, floating-point values in fixed notation
// with six decimals. Throws SerializationError on NaN or infinity.
std::string canonical_dump(const nlohmann::json& value);

// Rounds to the value the canonical form will print, so that parsing the
// canonical text reproduces it exactly.
double quantize(double value);

}  // namespace fef
