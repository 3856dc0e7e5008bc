#pragma once

#include <cstdint>

#include "krein/string.hpp"

namespace krein {

// Deterministic, valid-by-construction test string for a seed: 1-3 density
// pieces drawn from the family menu (constant / exponential / power /
// rational_power / tabulated, occasional zero plateaus), 0-2 atoms, finite or
// infinite length, mixed end conditions.  Identical seeds give identical
// strings; the uniform draws are derived from the raw mt19937_64 stream, so
// the layout does not depend on library distribution internals.
KreinString random_string(std::uint64_t seed);

}  // namespace krein
