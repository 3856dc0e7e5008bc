#include "krein/random_string.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace krein {

namespace {

struct Draw {
  std::mt19937_64 eng;
  explicit Draw(std::uint64_t seed) : eng(seed) {}
  double uniform() { return static_cast<double>(eng() >> 11) * 0x1.0p-53; }
  double range(double a, double b) { return a + (b - a) * uniform(); }
  int pick(int n) { return static_cast<int>(eng() % static_cast<std::uint64_t>(n)); }
  bool chance(double p) { return uniform() < p; }
};

DensitySegment make_piece(Draw& rng, double lo, double hi, bool last_infinite) {
  DensitySegment seg;
  seg.lo = lo;
  seg.hi = hi;
  // zero plateaus exercise the atom/plateau duality but stay a minority
  if (rng.chance(0.08)) {
    seg.family = Family::constant;
    seg.c = 0.0;
    return seg;
  }
  int menu = last_infinite ? 4 : 5;  // tabulated pieces need a finite cell
  switch (rng.pick(menu)) {
    case 0:
      seg.family = Family::constant;
      seg.c = rng.range(0.1, 5.0);
      break;
    case 1:
      seg.family = Family::exponential;
      seg.c = rng.range(0.1, 2.0);
      seg.q = rng.range(-2.0, 2.0);
      break;
    case 2:
      seg.family = Family::power;
      seg.c = rng.range(0.1, 2.0);
      seg.p = rng.range(-0.85, 2.5);
      break;
    case 3: {
      seg.family = Family::rational_power;
      seg.c = rng.range(0.1, 2.0);
      seg.r = rng.range(-3.0, 2.2);
      if (last_infinite) {
        seg.q = rng.range(0.1, 2.0);  // z = 1 + q s must stay positive forever
      } else {
        // allow decreasing z but keep it >= 0.05 across the cell
        double qmin = -0.95 / std::max(hi, 1e-3);
        seg.q = rng.range(qmin, 2.0);
        if (1.0 + seg.q * hi < 0.05) seg.q = (0.05 - 1.0) / hi;
      }
      break;
    }
    default: {
      seg.family = Family::tabulated;
      int nk = 4 + rng.pick(5);
      for (int i = 0; i < nk; ++i) {
        seg.knots.push_back(lo + (hi - lo) * i / (nk - 1));
        seg.values.push_back(rng.range(0.05, 3.0));
      }
      break;
    }
  }
  return seg;
}

}  // namespace

KreinString random_string(std::uint64_t seed) {
  Draw rng(seed);
  KreinString str;

  bool finite = rng.chance(0.5);
  double span = finite ? rng.range(0.5, 3.0) : rng.range(1.0, 4.0);
  if (finite) str.R = span;

  int n_seg = 1 + rng.pick(3);
  std::vector<double> cand = {0.0};
  for (int i = 1; i < n_seg; ++i) cand.push_back(span * rng.range(0.2, 0.8));
  std::sort(cand.begin(), cand.end());
  std::vector<double> cuts = {0.0};
  for (std::size_t i = 1; i < cand.size(); ++i)
    if (cand[i] - cuts.back() >= 1e-3 * span) cuts.push_back(cand[i]);
  if (span - cuts.back() < 1e-3 * span && cuts.size() > 1) cuts.pop_back();
  cuts.push_back(span);
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    double lo = cuts[i];
    double hi = cuts[i + 1];
    bool last_infinite = !finite && i + 2 == cuts.size();
    if (last_infinite) hi = kInf;
    str.segments.push_back(make_piece(rng, lo, hi, last_infinite));
  }

  // guarantee a non-trivial measure
  bool all_zero = true;
  for (const DensitySegment& seg : str.segments) all_zero &= seg.is_zero();
  if (all_zero) {
    str.segments.front().family = Family::constant;
    str.segments.front().c = 1.0;
    str.segments.front().knots.clear();
    str.segments.front().values.clear();
  }

  int n_atoms = rng.chance(0.4) ? 1 + rng.pick(2) : 0;
  for (int i = 0; i < n_atoms; ++i) {
    Atom at;
    at.s = rng.chance(0.1) ? 0.0 : span * rng.range(0.05, 0.9);
    at.mass = rng.range(0.1, 2.0);
    str.atoms.push_back(at);
  }
  std::sort(str.atoms.begin(), str.atoms.end(),
            [](const Atom& a, const Atom& b) { return a.s < b.s; });
  for (std::size_t i = 1; i < str.atoms.size(); ++i)
    if (str.atoms[i].s <= str.atoms[i - 1].s)
      str.atoms[i].s = str.atoms[i - 1].s + 0.01 * span;
  while (!str.atoms.empty() && str.atoms.back().s >= 0.95 * span)
    str.atoms.pop_back();

  if (finite)
    str.end = rng.chance(0.5) ? EndCondition::dirichlet_at_R
                              : EndCondition::neumann_at_R;

  str.validate();
  return str;
}

}  // namespace krein
