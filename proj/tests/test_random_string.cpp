#include "krein/random_string.hpp"

#include <cmath>

#include "doctest.h"
#include "krein/errors.hpp"
#include "krein/ode.hpp"

using namespace krein;

TEST_CASE("random strings are valid and deterministic") {
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    KreinString a = random_string(seed);
    KreinString b = random_string(seed);
    REQUIRE(a.segments.size() == b.segments.size());
    for (std::size_t i = 0; i < a.segments.size(); ++i) {
      CHECK(a.segments[i].family == b.segments[i].family);
      CHECK(a.segments[i].c == b.segments[i].c);
      CHECK(a.segments[i].q == b.segments[i].q);
    }
    CHECK(a.R == b.R);
    CHECK(a.atoms.size() == b.atoms.size());
  }
  // different seeds explore different shapes
  KreinString a = random_string(1);
  KreinString b = random_string(2);
  bool differ = a.segments.size() != b.segments.size() || a.R != b.R ||
                a.segments[0].family != b.segments[0].family ||
                a.segments[0].c != b.segments[0].c;
  CHECK(differ);
}

TEST_CASE("random strings have computable characteristics") {
  int finite_count = 0, atom_count = 0, families = 0;
  bool seen[5] = {};
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    KreinString str = random_string(seed);
    if (std::isfinite(str.R)) ++finite_count;
    if (str.has_atoms()) ++atom_count;
    for (const DensitySegment& seg : str.segments) seen[static_cast<int>(seg.family)] = true;
    double p1 = psi(str, 1.0);
    double p4 = psi(str, 4.0);
    CAPTURE(seed);
    CHECK(p1 > 0.0);
    CHECK(p4 > p1);  // psi is strictly increasing on non-trivial strings
  }
  for (bool s : seen) families += s;
  CHECK(finite_count > 5);
  CHECK(finite_count < 35);
  CHECK(atom_count > 5);
  CHECK(families == 5);
}
