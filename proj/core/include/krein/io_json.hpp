#pragma once

#include <string>

#include "krein/string.hpp"

namespace krein {

// Parse a string measure from JSON text.  Two top-level forms:
//
//   {"catalog": "<name>", "params": [..]}        catalog reference
//
//   {"R": 2.0 | "inf",                           explicit measure
//    "end": "natural" | "dirichlet" | "neumann",
//    "segments": [
//       {"family": "constant",       "lo": a, "hi": b, "c": c},
//       {"family": "power",          "lo": a, "hi": b, "c": c, "p": p},
//       {"family": "rational_power", "lo": a, "hi": b, "c": c, "q": q, "r": r},
//       {"family": "exponential",    "lo": a, "hi": b, "c": c, "q": q},
//       {"family": "tabulated",      "lo": a, "hi": b, "knots": [..], "values": [..]}],
//    "atoms": [{"s": s, "mass": m}, ...]}
//
// "hi" accepts the string "inf" on the final segment; omitted "R" means an
// infinite string; omitted "end" means natural.  Unknown keys anywhere are
// rejected, and the resulting string is validated before being returned.
// Malformed input throws std::invalid_argument with a diagnostic.
KreinString parse_string_spec(const std::string& text);

// parse_string_spec applied to the contents of a file.
KreinString load_string_spec(const std::string& path);

// Serialize in the explicit form above; parse_string_spec round-trips it.
std::string string_spec_to_json(const KreinString& str);

}  // namespace krein
