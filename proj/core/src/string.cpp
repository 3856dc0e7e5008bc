#include "krein/string.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <stdexcept>

#include "krein/errors.hpp"
#include "krein/util.hpp"

namespace krein {

namespace {

bool is_integer(double x) { return std::isfinite(x) && x == std::floor(x); }

double binom(int n, int k) {
  double b = 1.0;
  for (int i = 0; i < k; ++i) b = b * (n - i) / (i + 1);
  return b;
}

// pow that tolerates a negative base when the exponent is an integer
// (needed for rational pieces whose normalisation 1+q*s is negative).
double rpow(double base, double e) {
  if (base < 0.0 && is_integer(e)) {
    double m = std::pow(-base, e);
    return (static_cast<long long>(e) % 2 == 0) ? m : -m;
  }
  return std::pow(base, e);
}

}  // namespace

const char* family_name(Family f) {
  switch (f) {
    case Family::constant: return "constant";
    case Family::power: return "power";
    case Family::rational_power: return "rational_power";
    case Family::exponential: return "exponential";
    case Family::tabulated: return "tabulated";
  }
  return "?";
}

const char* end_name(EndCondition e) {
  switch (e) {
    case EndCondition::natural: return "natural";
    case EndCondition::dirichlet_at_R: return "dirichlet_at_R";
    case EndCondition::neumann_at_R: return "neumann_at_R";
  }
  return "?";
}

double DensitySegment::density(double s) const {
  switch (family) {
    case Family::constant:
      return c;
    case Family::power: {
      double d = s - lo;
      if (d <= 0.0) return p < 0.0 ? kInf : (p == 0.0 ? c : 0.0);
      return c * std::pow(d, p);
    }
    case Family::rational_power: {
      double z = 1.0 + q * s;
      if (z == 0.0) return r < 0.0 ? kInf : (r == 0.0 ? c : 0.0);
      return c * rpow(z, r);
    }
    case Family::exponential:
      return c * std::exp(q * s);
    case Family::tabulated: {
      if (s <= knots.front()) return values.front();
      if (s >= knots.back()) return values.back();
      auto it = std::upper_bound(knots.begin(), knots.end(), s);
      std::size_t i = static_cast<std::size_t>(it - knots.begin()) - 1;
      double w = (s - knots[i]) / (knots[i + 1] - knots[i]);
      return values[i] + w * (values[i + 1] - values[i]);
    }
  }
  return 0.0;
}

double DensitySegment::mass(double a, double b) const {
  if (b <= a) return 0.0;
  switch (family) {
    case Family::constant:
      return std::isinf(b) ? (c > 0.0 ? kInf : 0.0) : c * (b - a);
    case Family::power: {
      double e = p + 1.0;
      if (std::isinf(b)) return kInf;
      return c * (std::pow(b - lo, e) - std::pow(a - lo, e)) / e;
    }
    case Family::rational_power: {
      double za = 1.0 + q * a;
      if (r == 0.0 || q == 0.0) return std::isinf(b) ? kInf : c * (b - a);
      if (std::isinf(b)) {
        // q > 0 required for an infinite tail; finite mass iff r < -1
        if (r < -1.0) return -c * rpow(za, r + 1.0) / (q * (r + 1.0));
        return kInf;
      }
      double zb = 1.0 + q * b;
      if (r == -1.0) return (c / q) * std::log(std::abs(zb / za));
      return c * (rpow(zb, r + 1.0) - rpow(za, r + 1.0)) / (q * (r + 1.0));
    }
    case Family::exponential: {
      if (q == 0.0) return std::isinf(b) ? kInf : c * (b - a);
      if (std::isinf(b)) return q < 0.0 ? -c * std::exp(q * a) / q : kInf;
      return c * (std::exp(q * b) - std::exp(q * a)) / q;
    }
    case Family::tabulated: {
      double total = 0.0;
      for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
        double x0 = std::max(a, knots[i]), x1 = std::min(b, knots[i + 1]);
        if (x1 <= x0) continue;
        double h = knots[i + 1] - knots[i];
        double v0 = values[i] + (values[i + 1] - values[i]) * (x0 - knots[i]) / h;
        double v1 = values[i] + (values[i + 1] - values[i]) * (x1 - knots[i]) / h;
        total += 0.5 * (v0 + v1) * (x1 - x0);
      }
      return total;
    }
  }
  return 0.0;
}

double DensitySegment::moment(double a, double b, double center, int k) const {
  if (k == 0) return mass(a, b);
  if (b <= a) return 0.0;
  if (k < 0 || k > 4) throw std::invalid_argument("moment: k must be in [0,4]");
  switch (family) {
    case Family::constant: {
      double e = k + 1.0;
      return c * (std::pow(b - center, e) - std::pow(a - center, e)) / e;
    }
    case Family::power: {
      // (s-center)^k expanded about the anchor lo
      double total = 0.0;
      for (int j = 0; j <= k; ++j) {
        double e = p + j + 1.0;
        double term = binom(k, j) * std::pow(lo - center, static_cast<double>(k - j)) *
                      (std::pow(b - lo, e) - std::pow(a - lo, e)) / e;
        total += term;
      }
      return c * total;
    }
    case Family::rational_power: {
      if (q == 0.0 || r == 0.0) {
        DensitySegment cc = *this;
        cc.family = Family::constant;
        cc.c = (q == 0.0) ? c : c;  // r==0: density is c
        return cc.moment(a, b, center, k);
      }
      // substitute z = 1+q*s: (s-center)^k = q^-k * (z - zc)^k
      double zc = 1.0 + q * center;
      double za = 1.0 + q * a, zb = 1.0 + q * b;
      double total = 0.0;
      for (int j = 0; j <= k; ++j) {
        double coef = binom(k, j) * rpow(-zc, static_cast<double>(k - j));
        double e = r + j;
        double I;  // int z^e dz / q between za and zb (in s measure)
        if (e == -1.0)
          I = std::log(std::abs(zb / za)) / q;
        else
          I = (rpow(zb, e + 1.0) - rpow(za, e + 1.0)) / (q * (e + 1.0));
        total += coef * I;
      }
      return c * total / std::pow(q, static_cast<double>(k));
    }
    case Family::exponential: {
      if (q == 0.0) {
        DensitySegment cc = *this;
        cc.family = Family::constant;
        return cc.moment(a, b, center, k);
      }
      // I_m = int e^{qs}(s-center)^m ds, I_m = e^{qs}(s-c)^m/q - (m/q) I_{m-1}
      auto eval = [&](double s) {
        double Im = std::exp(q * s) / q;
        double acc = Im;  // I_0 antiderivative at s
        for (int m = 1; m <= k; ++m)
          acc = std::exp(q * s) * std::pow(s - center, static_cast<double>(m)) / q -
                (m / q) * acc;
        return acc;
      };
      return c * (eval(b) - eval(a));
    }
    case Family::tabulated: {
      double total = 0.0;
      for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
        double x0 = std::max(a, knots[i]), x1 = std::min(b, knots[i + 1]);
        if (x1 <= x0) continue;
        double h = knots[i + 1] - knots[i];
        double m = (values[i + 1] - values[i]) / h;
        // A(s) = v0 + m (s - u0) = [v0 + m (center - u0)] + m (s - center)
        double amid = values[i] + m * (center - knots[i]);
        double e1 = k + 1.0, e2 = k + 2.0;
        total += amid * (std::pow(x1 - center, e1) - std::pow(x0 - center, e1)) / e1 +
                 m * (std::pow(x1 - center, e2) - std::pow(x0 - center, e2)) / e2;
      }
      return total;
    }
  }
  return 0.0;
}

double DensitySegment::sqrt_mass(double a, double b) const {
  if (b <= a) return 0.0;
  switch (family) {
    case Family::constant:
      return std::isinf(b) ? (c > 0.0 ? kInf : 0.0) : std::sqrt(c) * (b - a);
    case Family::power: {
      double e = 0.5 * p + 1.0;
      if (std::isinf(b)) return kInf;
      return std::sqrt(c) * (std::pow(b - lo, e) - std::pow(a - lo, e)) / e;
    }
    case Family::rational_power: {
      if (q == 0.0 || r == 0.0) {
        double v = std::sqrt(c);
        return std::isinf(b) ? kInf : v * (b - a);
      }
      double za = 1.0 + q * a;
      double sc = std::sqrt(c);
      if (r == -2.0) {
        if (std::isinf(b)) return kInf;  // log divergence
        double zb = 1.0 + q * b;
        return (sc / q) * std::log(std::abs(zb / za));
      }
      double e = 0.5 * r + 1.0;
      if (std::isinf(b)) {
        if (0.5 * r < -1.0) return -sc * rpow(za, e) / (q * e);
        return kInf;
      }
      double zb = 1.0 + q * b;
      return sc * (rpow(zb, e) - rpow(za, e)) / (q * e);
    }
    case Family::exponential: {
      if (q == 0.0) return std::isinf(b) ? kInf : std::sqrt(c) * (b - a);
      double h = 0.5 * q;
      if (std::isinf(b)) return q < 0.0 ? -std::sqrt(c) * std::exp(h * a) / h : kInf;
      return std::sqrt(c) * (std::exp(h * b) - std::exp(h * a)) / h;
    }
    case Family::tabulated: {
      double total = 0.0;
      for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
        double x0 = std::max(a, knots[i]), x1 = std::min(b, knots[i + 1]);
        if (x1 <= x0) continue;
        double h = knots[i + 1] - knots[i];
        double m = (values[i + 1] - values[i]) / h;
        double v0 = values[i] + m * (x0 - knots[i]);
        double v1 = values[i] + m * (x1 - knots[i]);
        if (std::abs(m) < 1e-300)
          total += std::sqrt(std::max(0.0, v0)) * (x1 - x0);
        else
          total += (std::pow(std::max(0.0, v1), 1.5) - std::pow(std::max(0.0, v0), 1.5)) /
                   (1.5 * m);
      }
      return total;
    }
  }
  return 0.0;
}

bool DensitySegment::is_zero() const {
  if (family == Family::constant) return c == 0.0;
  if (family == Family::tabulated)
    return std::all_of(values.begin(), values.end(), [](double v) { return v == 0.0; });
  return false;
}

bool DensitySegment::singular_at_hi() const {
  if (family != Family::rational_power || r >= 0.0 || std::isinf(hi)) return false;
  double z = 1.0 + q * hi;
  return std::abs(z) <= 1e-12 * std::max(1.0, std::abs(q * hi));
}

void DensitySegment::validate(bool is_last, double R) const {
  if (!(lo >= 0.0) || !std::isfinite(lo)) throw std::invalid_argument("segment: bad lo");
  if (!(hi > lo)) throw std::invalid_argument("segment: hi must exceed lo");
  if (std::isinf(hi) && (!is_last || std::isfinite(R)))
    throw std::invalid_argument("segment: infinite hi only on the final piece of an infinite string");
  switch (family) {
    case Family::constant:
      if (!(c >= 0.0) || !std::isfinite(c)) throw std::invalid_argument("constant segment: c must be >= 0");
      break;
    case Family::power:
      if (!(c > 0.0)) throw std::invalid_argument("power segment: c must be positive");
      if (!(p > -1.0)) throw std::invalid_argument("power segment: p must exceed -1");
      break;
    case Family::rational_power: {
      if (!(c > 0.0)) throw std::invalid_argument("rational segment: c must be positive");
      if (q != 0.0) {
        double zlo = 1.0 + q * lo;
        double zhi = std::isinf(hi) ? (q > 0.0 ? kInf : -kInf) : 1.0 + q * hi;
        if (zlo == 0.0) throw std::invalid_argument("rational segment: 1+q*s vanishes at lo");
        bool neg_base = zlo < 0.0;
        if (neg_base && !is_integer(r))
          throw std::invalid_argument("rational segment: negative 1+q*s with non-integer exponent");
        if (!std::isinf(zhi) && ((zlo > 0.0 && zhi < 0.0) || (zlo < 0.0 && zhi > 0.0)))
          throw std::invalid_argument("rational segment: 1+q*s changes sign inside");
        bool vanishes_at_hi = !std::isinf(hi) &&
            std::abs(1.0 + q * hi) <= 1e-12 * std::max(1.0, std::abs(q * hi));
        if (vanishes_at_hi && r < 0.0 && !(is_last && hi >= R * (1.0 - 1e-12)))
          throw std::invalid_argument("rational segment: interior blow-up of the density");
      }
      break;
    }
    case Family::exponential:
      if (!(c > 0.0)) throw std::invalid_argument("exponential segment: c must be positive");
      if (!std::isfinite(q)) throw std::invalid_argument("exponential segment: bad q");
      break;
    case Family::tabulated: {
      if (std::isinf(hi)) throw std::invalid_argument("tabulated segment: hi must be finite");
      if (knots.size() < 2 || knots.size() != values.size())
        throw std::invalid_argument("tabulated segment: need matching knots/values, >= 2");
      double scale = std::max(1.0, std::abs(hi));
      if (std::abs(knots.front() - lo) > 1e-9 * scale || std::abs(knots.back() - hi) > 1e-9 * scale)
        throw std::invalid_argument("tabulated segment: knots must span [lo, hi]");
      for (std::size_t i = 0; i + 1 < knots.size(); ++i)
        if (!(knots[i + 1] > knots[i])) throw std::invalid_argument("tabulated segment: knots must increase");
      for (double v : values)
        if (!(v >= 0.0) || !std::isfinite(v)) throw std::invalid_argument("tabulated segment: values must be finite and >= 0");
      break;
    }
  }
}

void KreinString::validate() const {
  if (!(R > 0.0)) throw std::invalid_argument("string: R must be positive");
  if (end == EndCondition::natural && std::isfinite(R))
    throw std::invalid_argument("string: natural end requires R = inf");
  if (end != EndCondition::natural && !std::isfinite(R))
    throw std::invalid_argument("string: finite R required for dirichlet/neumann ends");
  if (segments.empty()) throw std::invalid_argument("string: segments must tile [0, R)");
  double cursor = 0.0;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const auto& seg = segments[i];
    double scale = std::max(1.0, std::abs(cursor));
    if (std::abs(seg.lo - cursor) > 1e-9 * scale)
      throw std::invalid_argument("string: segments must tile [0, R) without gaps");
    seg.validate(i + 1 == segments.size(), R);
    cursor = seg.hi;
  }
  if (std::isfinite(R)) {
    if (std::abs(cursor - R) > 1e-9 * std::max(1.0, R))
      throw std::invalid_argument("string: segments must reach R");
  } else if (!std::isinf(cursor)) {
    throw std::invalid_argument("string: infinite string needs an infinite final segment");
  }
  double prev = -1.0;
  for (const auto& at : atoms) {
    if (!(at.s >= 0.0) || !(at.s < R) || !std::isfinite(at.s))
      throw std::invalid_argument("string: atom positions must lie in [0, R)");
    if (!(at.mass > 0.0) || !std::isfinite(at.mass))
      throw std::invalid_argument("string: atom masses must be positive");
    if (at.s <= prev) throw std::invalid_argument("string: atoms must be sorted with distinct positions");
    prev = at.s;
  }
  if (end == EndCondition::neumann_at_R) {
    const auto& last = segments.back();
    if (last.singular_at_hi() && last.r <= -1.0)
      throw std::invalid_argument("string: neumann end incompatible with infinite mass near R");
  }
}

double KreinString::density(double s) const {
  for (const auto& seg : segments)
    if (s >= seg.lo && s < seg.hi) return seg.density(s);
  return 0.0;
}

double KreinString::last_feature() const {
  if (std::isfinite(R)) return R;
  double lf = 0.0;
  for (const auto& seg : segments) {
    lf = std::max(lf, seg.lo);
    if (std::isfinite(seg.hi)) lf = std::max(lf, seg.hi);
  }
  if (!atoms.empty()) lf = std::max(lf, atoms.back().s);
  return lf;
}

double KreinString::total_mass() const {
  double total = 0.0;
  for (const auto& seg : segments) {
    double m = seg.mass(seg.lo, seg.hi);
    if (std::isinf(m)) return kInf;
    total += m;
  }
  for (const auto& at : atoms) total += at.mass;
  return total;
}

bool KreinString::moment_at_R_finite() const {
  if (!std::isfinite(R)) throw std::logic_error("moment_at_R_finite: finite R required");
  const auto& last = segments.back();
  if (last.singular_at_hi()) return last.r > -2.0;
  return true;
}

double cumulative_mass(const KreinString& str, double s) {
  if (!(s >= 0.0) || s > str.R * (1.0 + 1e-12))
    throw std::domain_error("cumulative_mass: s outside [0, R]");
  double total = 0.0;
  for (const auto& seg : str.segments) {
    if (s <= seg.lo) break;
    total += seg.mass(seg.lo, std::min(s, seg.hi));
  }
  for (const auto& at : str.atoms) {
    if (at.s >= s) break;
    total += at.mass;
  }
  return total;
}

void CoefficientA::validate() const {
  if (!(r > 0.0)) throw std::invalid_argument("coefficient: r must be positive");
  if (segments.empty()) throw std::invalid_argument("coefficient: segments must tile [0, r)");
  double cursor = 0.0;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const auto& seg = segments[i];
    if (std::abs(seg.lo - cursor) > 1e-9 * std::max(1.0, std::abs(cursor)))
      throw std::invalid_argument("coefficient: segments must tile [0, r)");
    seg.validate(i + 1 == segments.size(), r);
    if (seg.is_zero()) throw std::invalid_argument("coefficient: a must be positive");
    if (seg.family == Family::tabulated)
      for (double v : seg.values)
        if (!(v > 0.0)) throw std::invalid_argument("coefficient: tabulated a must be positive");
    cursor = seg.hi;
  }
  if (std::isfinite(r)) {
    if (std::abs(cursor - r) > 1e-9 * std::max(1.0, r))
      throw std::invalid_argument("coefficient: segments must reach r");
  } else if (!std::isinf(cursor)) {
    throw std::invalid_argument("coefficient: infinite domain needs an infinite final segment");
  }
}

double CoefficientA::value(double t) const {
  for (const auto& seg : segments)
    if (t >= seg.lo && t < seg.hi) return seg.density(t);
  return segments.back().density(t);
}

namespace {

// sigma increment int_{t0}^{t} a^-1 du for one coefficient piece; throws when
// the integral diverges at the left end of the piece.
double sigma_piece(const DensitySegment& seg, double t0, double t) {
  switch (seg.family) {
    case Family::constant:
      return (t - t0) / seg.c;
    case Family::power: {
      if (seg.p >= 1.0)
        throw std::invalid_argument("from_coefficient_a: 1/a not integrable (power p >= 1)");
      double e = 1.0 - seg.p;
      return (std::pow(t - seg.lo, e) - std::pow(t0 - seg.lo, e)) / (seg.c * e);
    }
    case Family::rational_power: {
      if (seg.q == 0.0 || seg.r == 0.0) return (t - t0) / seg.c;
      double z0 = 1.0 + seg.q * t0, z1 = 1.0 + seg.q * t;
      if (seg.r == 1.0) return std::log(std::abs(z1 / z0)) / (seg.c * seg.q);
      double e = 1.0 - seg.r;
      return (rpow(z1, e) - rpow(z0, e)) / (seg.c * seg.q * e);
    }
    case Family::exponential: {
      if (seg.q == 0.0) return (t - t0) / seg.c;
      return (std::exp(-seg.q * t0) - std::exp(-seg.q * t)) / (seg.c * seg.q);
    }
    case Family::tabulated: {
      double total = 0.0;
      for (std::size_t i = 0; i + 1 < seg.knots.size(); ++i) {
        double x0 = std::max(t0, seg.knots[i]), x1 = std::min(t, seg.knots[i + 1]);
        if (x1 <= x0) continue;
        double h = seg.knots[i + 1] - seg.knots[i];
        double m = (seg.values[i + 1] - seg.values[i]) / h;
        double v0 = seg.values[i] + m * (x0 - seg.knots[i]);
        double v1 = seg.values[i] + m * (x1 - seg.knots[i]);
        if (std::abs(m) * (x1 - x0) < 1e-14 * v0)
          total += (x1 - x0) / v0;
        else
          total += std::log(v1 / v0) / m;
      }
      return total;
    }
  }
  return 0.0;
}

// sigma increment over a full piece, allowing an infinite result.
double sigma_piece_total(const DensitySegment& seg) {
  if (std::isinf(seg.hi)) {
    switch (seg.family) {
      case Family::constant: return kInf;
      case Family::power: return kInf;  // exponent 1-p > 0
      case Family::rational_power: {
        if (seg.q == 0.0 || seg.r == 0.0) return kInf;
        if (seg.r > 1.0) {
          double z0 = 1.0 + seg.q * seg.lo;
          return rpow(z0, 1.0 - seg.r) / (seg.c * seg.q * (seg.r - 1.0));
        }
        return kInf;
      }
      case Family::exponential: {
        if (seg.q > 0.0) return std::exp(-seg.q * seg.lo) / (seg.c * seg.q);
        return kInf;
      }
      case Family::tabulated: return kInf;  // excluded by validate
    }
  }
  // finite hi; the integrand may still diverge at hi (a -> 0 there)
  switch (seg.family) {
    case Family::rational_power: {
      if (seg.q != 0.0 && seg.r != 0.0) {
        double zhi = 1.0 + seg.q * seg.hi;
        if (std::abs(zhi) <= 1e-12 * std::max(1.0, std::abs(seg.q * seg.hi)) && seg.r >= 1.0)
          return kInf;
      }
      break;
    }
    default: break;
  }
  return sigma_piece(seg, seg.lo, seg.hi);
}

}  // namespace

double sigma_of_t(const CoefficientA& coeff, double t) {
  if (!(t >= 0.0) || t > coeff.r) throw std::domain_error("sigma_of_t: t outside [0, r]");
  double s = 0.0;
  for (const auto& seg : coeff.segments) {
    if (t <= seg.lo) break;
    if (t >= seg.hi)
      s += sigma_piece(seg, seg.lo, seg.hi);
    else
      s += sigma_piece(seg, seg.lo, t);
  }
  return s;
}

KreinString from_coefficient_a(const CoefficientA& coeff, std::size_t n_knots,
                               std::optional<EndCondition> end_override) {
  coeff.validate();
  KreinString out;
  double s0 = 0.0;
  bool a_integrable = true;
  for (std::size_t i = 0; i < coeff.segments.size(); ++i) {
    const auto& seg = coeff.segments[i];
    double len = sigma_piece_total(seg);
    double s1 = std::isinf(len) ? kInf : s0 + len;
    double am = seg.mass(seg.lo, seg.hi);
    if (std::isinf(am)) a_integrable = false;
    DensitySegment o;
    o.lo = s0;
    o.hi = s1;
    bool mapped = false;
    switch (seg.family) {
      case Family::constant: {
        o.family = Family::constant;
        o.c = seg.c * seg.c;
        mapped = true;
        break;
      }
      case Family::power: {
        // a = c (t-lo)^p, p in (-1,1): A = c^{2/(1-p)} (1-p)^{2p/(1-p)} (s-s0)^{2p/(1-p)}
        if (seg.p <= -1.0)
          throw std::invalid_argument("from_coefficient_a: resulting string not locally finite (power p <= -1)");
        double ps = 2.0 * seg.p / (1.0 - seg.p);
        o.family = Family::power;
        o.p = ps;
        o.c = std::pow(seg.c, 2.0 / (1.0 - seg.p)) * std::pow(1.0 - seg.p, ps);
        mapped = true;
        break;
      }
      case Family::exponential: {
        if (seg.q == 0.0) {
          o.family = Family::constant;
          o.c = seg.c * seg.c;
          mapped = true;
          break;
        }
        // A(s) = c^2 [K - c q (s)]^{-2} with K = e^{-q lo} + c q s0
        double K = std::exp(-seg.q * seg.lo) + seg.c * seg.q * s0;
        o.family = Family::rational_power;
        o.r = -2.0;
        o.c = seg.c * seg.c / (K * K);
        o.q = -seg.c * seg.q / K;
        if (std::isfinite(o.hi) && seg.q > 0.0 && std::isinf(seg.hi)) o.hi = -1.0 / o.q;
        if (std::isfinite(o.hi)) s1 = o.hi;
        mapped = std::isfinite(K) && K != 0.0;
        break;
      }
      case Family::rational_power: {
        if (seg.q == 0.0 || seg.r == 0.0) {
          o.family = Family::constant;
          o.c = seg.c * seg.c;
          mapped = true;
          break;
        }
        double rho = seg.r;
        if (rho == 1.0) {
          // A = c^2 (1+q lo)^2 e^{-2 c q s0} e^{2 c q s}
          double z0 = 1.0 + seg.q * seg.lo;
          o.family = Family::exponential;
          o.q = 2.0 * seg.c * seg.q;
          o.c = seg.c * seg.c * z0 * z0 * std::exp(-o.q * s0);
          mapped = true;
          break;
        }
        double z0 = 1.0 + seg.q * seg.lo;
        double m = seg.c * seg.q * (1.0 - rho);
        double K = rpow(z0, 1.0 - rho) - m * s0;
        double rs = 2.0 * rho / (1.0 - rho);
        if (K > 0.0 || is_integer(rs)) {
          o.family = Family::rational_power;
          o.r = rs;
          o.c = seg.c * seg.c * rpow(K, rs);
          o.q = m / K;
          if (std::isinf(seg.hi) && rho > 1.0) {
            o.hi = -1.0 / o.q;
            s1 = o.hi;
          }
          mapped = std::isfinite(o.c) && o.c > 0.0;
        }
        break;
      }
      case Family::tabulated:
        break;  // tabulated handled below
    }
    if (!mapped) {
      // tabulate a^2 against sigma(t) on the piece's own knots (tabulated
      // input) or on a geometric refinement (fallback cases)
      if (std::isinf(s1))
        throw not_representable_error("from_coefficient_a: piece maps outside the family menu");
      std::vector<double> tk;
      if (seg.family == Family::tabulated) {
        tk = seg.knots;
      } else {
        std::size_t m = std::max<std::size_t>(16, n_knots / coeff.segments.size());
        tk.resize(m + 1);
        for (std::size_t j = 0; j <= m; ++j)
          tk[j] = seg.lo + (seg.hi - seg.lo) * static_cast<double>(j) / static_cast<double>(m);
      }
      o.family = Family::tabulated;
      o.knots.clear();
      o.values.clear();
      double acc = s0;
      double prev_t = seg.lo;
      for (double t : tk) {
        acc += sigma_piece(seg, prev_t, t);
        prev_t = t;
        double av = seg.density(t);
        o.knots.push_back(acc);
        o.values.push_back(av * av);
      }
      o.knots.front() = s0;
      s1 = acc;
      o.hi = s1;
    }
    out.segments.push_back(std::move(o));
    s0 = s1;
    if (std::isinf(s0)) break;
  }
  out.R = std::isinf(s0) ? kInf : s0;
  if (std::isinf(out.R)) {
    out.end = EndCondition::natural;
    if (end_override && *end_override != EndCondition::natural)
      throw std::invalid_argument("from_coefficient_a: R = inf admits only the natural end");
  } else if (end_override) {
    out.end = *end_override;
  } else {
    out.end = a_integrable ? EndCondition::neumann_at_R : EndCondition::dirichlet_at_R;
  }
  out.validate();
  return out;
}

CoefficientA to_coefficient_a(const KreinString& str, std::size_t n_knots) {
  str.validate();
  if (str.has_atoms()) throw not_representable_error("to_coefficient_a: atoms are not representable");
  for (const auto& seg : str.segments)
    if (seg.is_zero()) throw not_representable_error("to_coefficient_a: density vanishes on an interval");
  if (n_knots < 8) throw std::invalid_argument("to_coefficient_a: n_knots too small");

  // cumulative tau at segment boundaries
  std::vector<double> tau_cum(str.segments.size() + 1, 0.0);
  for (std::size_t i = 0; i < str.segments.size(); ++i) {
    const auto& seg = str.segments[i];
    double inc = seg.sqrt_mass(seg.lo, std::isinf(seg.hi) ? kInf : seg.hi);
    tau_cum[i + 1] = std::isinf(inc) ? kInf : tau_cum[i] + inc;
  }
  double r_total = tau_cum.back();

  // coverage: stop short of R (or of infinity) but span the structure
  double s_hi;
  if (std::isfinite(str.R))
    s_hi = str.R * (1.0 - 1e-9) + 0.0;
  else
    s_hi = std::max(2.0 * std::max(str.last_feature(), 1.0), 50.0);
  double t_hi = 0.0;
  for (std::size_t i = 0; i < str.segments.size(); ++i) {
    const auto& seg = str.segments[i];
    if (s_hi <= seg.lo) break;
    t_hi = tau_cum[i] + seg.sqrt_mass(seg.lo, std::min(s_hi, seg.hi));
  }

  auto tau_of_s = [&](double s) {
    double t = 0.0;
    for (std::size_t i = 0; i < str.segments.size(); ++i) {
      const auto& seg = str.segments[i];
      if (s <= seg.lo) break;
      t = tau_cum[i] + seg.sqrt_mass(seg.lo, std::min(s, seg.hi));
    }
    return t;
  };
  auto s_of_tau = [&](double t) {
    // bracket by segment, then bisect (tolerance 1e-12 in s, relative)
    std::size_t i = 0;
    while (i + 1 < str.segments.size() && tau_cum[i + 1] < t) ++i;
    const auto& seg = str.segments[i];
    double a = seg.lo;
    double b = std::isinf(seg.hi) ? std::max(2.0 * s_hi, 2.0 * a + 1.0) : seg.hi;
    while (tau_of_s(b) < t && std::isinf(seg.hi)) b *= 2.0;
    for (int it = 0; it < 200; ++it) {
      double mid = 0.5 * (a + b);
      if (tau_of_s(mid) < t)
        a = mid;
      else
        b = mid;
      if (b - a <= 1e-12 * std::max(1.0, std::abs(b))) break;
    }
    return 0.5 * (a + b);
  };

  CoefficientA out;
  out.r = t_hi;  // covered range; the true tau-limit may be larger or infinite

  const auto& first = str.segments.front();
  double t_lo = 0.0;
  if (first.family == Family::power && first.p != 0.0) {
    // exact power head: a(t) = c_t t^{p/(p+2)} on [0, t_lo)
    double pt = first.p / (first.p + 2.0);
    double span = std::min(first.hi, s_hi);
    t_lo = std::max(1e-8 * t_hi, 0.125 * tau_of_s(span));
    double s_at = s_of_tau(t_lo);
    double a_at = std::sqrt(str.density(s_at));
    DensitySegment head;
    head.lo = 0.0;
    head.hi = t_lo;
    head.family = Family::power;
    head.p = pt;
    head.c = a_at / std::pow(t_lo, pt);
    out.segments.push_back(std::move(head));
  }

  DensitySegment tab;
  tab.lo = t_lo;
  tab.hi = t_hi;
  tab.family = Family::tabulated;
  double t_first = (t_lo > 0.0) ? t_lo : std::min(1e-8 * t_hi, t_hi / static_cast<double>(n_knots));
  std::vector<double> tg = geometric_grid(t_first, t_hi, n_knots);
  if (t_lo == 0.0) {
    tab.knots.push_back(0.0);
    tab.values.push_back(std::sqrt(str.segments.front().density(0.0)));
  }
  for (double t : tg) {
    double s_at = s_of_tau(t);
    tab.knots.push_back(t);
    tab.values.push_back(std::sqrt(str.density(s_at)));
  }
  out.segments.push_back(std::move(tab));
  out.validate();
  (void)r_total;
  return out;
}

namespace {

struct InversePiece {
  bool ok = false;
  DensitySegment seg;
};

// Closed-form inverse of one positive density piece of A under the exchange of
// the distribution function's axes: the piece lives on [x0, x1) with
// B(x) = 1/A(s(x)).
InversePiece invert_piece(const DensitySegment& a, double s0, double x0, double x1) {
  InversePiece out;
  DensitySegment& b = out.seg;
  b.lo = x0;
  b.hi = x1;
  switch (a.family) {
    case Family::constant: {
      b.family = Family::constant;
      b.c = 1.0 / a.c;
      out.ok = true;
      return out;
    }
    case Family::power: {
      // anchored at the segment lo; carries over only when s0 == anchor
      if (std::abs(s0 - a.lo) > 1e-12 * std::max(1.0, std::abs(s0))) return out;
      double pb = -a.p / (a.p + 1.0);
      b.family = Family::power;
      b.p = pb;
      b.c = std::pow(a.c, -1.0 / (a.p + 1.0)) * std::pow(a.p + 1.0, pb);
      out.ok = std::isfinite(b.c) && b.c > 0.0;
      return out;
    }
    case Family::exponential: {
      if (a.q == 0.0) {
        b.family = Family::constant;
        b.c = 1.0 / a.c;
        out.ok = true;
        return out;
      }
      // B(x) = (1/c) e^{-q s(x)}, e^{q s} = e^{q s0} + q (x - x0)/c
      double K = std::exp(a.q * s0) - a.q * x0 / a.c;
      b.family = Family::rational_power;
      b.r = -1.0;
      b.c = 1.0 / (a.c * K);
      b.q = a.q / (a.c * K);
      out.ok = K > 0.0 && std::isfinite(K);
      return out;
    }
    case Family::rational_power: {
      if (a.q == 0.0 || a.r == 0.0) {
        b.family = Family::constant;
        b.c = 1.0 / a.c;
        out.ok = true;
        return out;
      }
      double z0 = 1.0 + a.q * s0;
      if (a.r == -1.0) {
        // log distribution: inverse is exponential
        double cb = rpow(z0, 1.0) / a.c;  // (1+q s0)/c
        b.family = Family::exponential;
        b.q = a.q / a.c;
        b.c = cb * std::exp(-b.q * x0);
        out.ok = z0 > 0.0;
        return out;
      }
      double m = a.q * (a.r + 1.0) / a.c;
      double K = rpow(z0, a.r + 1.0) - m * x0;
      double rb = -a.r / (a.r + 1.0);
      if (!(K > 0.0) && !is_integer(rb)) return out;
      b.family = Family::rational_power;
      b.r = rb;
      b.c = rpow(K, rb) / a.c;
      b.q = m / K;
      out.ok = std::isfinite(b.c) && b.c > 0.0;
      if (out.ok && std::isfinite(x1)) {
        double zb = 1.0 + b.q * x1;
        if (std::abs(zb) <= 1e-10 * std::max(1.0, std::abs(b.q * x1)) && rb < 0.0)
          b.hi = -1.0 / b.q;
      }
      return out;
    }
    case Family::tabulated:
      return out;  // handled by the caller
  }
  return out;
}

}  // namespace

KreinString complementary(const KreinString& str) {
  str.validate();

  // canonical form: neumann = extend by zero density on [R, inf)
  KreinString A = str;
  if (A.end == EndCondition::neumann_at_R) {
    DensitySegment tail;
    tail.lo = A.R;
    tail.hi = kInf;
    tail.family = Family::constant;
    tail.c = 0.0;
    A.segments.push_back(tail);
    A.R = kInf;
    A.end = EndCondition::natural;
  }

  const bool terminates = std::isfinite(A.R);  // dirichlet string: graph just stops
  KreinString B;
  double x = 0.0;            // cursor in the mass coordinate = B position
  double pending_plateau = 0.0;  // accumulated zero-density length awaiting emission

  auto flush_plateau = [&]() {
    if (pending_plateau == 0.0) return;
    B.atoms.push_back({x, pending_plateau});
    pending_plateau = 0.0;
  };
  auto push_zero_segment = [&](double len) {
    DensitySegment z;
    z.lo = x;
    z.hi = x + len;
    z.family = Family::constant;
    z.c = 0.0;
    B.segments.push_back(z);
    x += len;
  };

  std::size_t ai = 0;  // next atom
  for (std::size_t si = 0; si < A.segments.size(); ++si) {
    const auto& seg = A.segments[si];
    double lo = seg.lo;
    while (true) {
      double next_atom = (ai < A.atoms.size() && A.atoms[ai].s < seg.hi) ? A.atoms[ai].s : kInf;
      double hi = std::min(seg.hi, next_atom);
      if (hi > lo) {
        if (seg.is_zero()) {
          pending_plateau += hi - lo;
        } else {
          flush_plateau();
          double piece_mass = seg.mass(lo, hi);
          double x1 = std::isinf(piece_mass) ? kInf : x + piece_mass;
          InversePiece inv = invert_piece(seg, lo, x, x1);
          if (inv.ok) {
            B.segments.push_back(inv.seg);
          } else {
            if (std::isinf(x1))
              throw not_representable_error("complementary: piece maps outside the family menu");
            // tabulated fallback: knots at x = F(s), values 1/A
            DensitySegment tb;
            tb.lo = x;
            tb.hi = x1;
            tb.family = Family::tabulated;
            std::vector<double> sk;
            if (seg.family == Family::tabulated) {
              for (double k : seg.knots)
                if (k >= lo && k <= hi) sk.push_back(k);
              if (sk.empty() || sk.front() > lo) sk.insert(sk.begin(), lo);
              if (sk.back() < hi) sk.push_back(hi);
            } else {
              const std::size_t m = 256;
              for (std::size_t j = 0; j <= m; ++j)
                sk.push_back(lo + (hi - lo) * static_cast<double>(j) / static_cast<double>(m));
            }
            double acc = x;
            double prev = sk.front();
            for (double s : sk) {
              acc += seg.mass(prev, s);
              prev = s;
              double d = seg.density(s);
              if (!(d > 0.0))
                throw not_representable_error("complementary: tabulated density touches zero");
              tb.knots.push_back(acc);
              tb.values.push_back(1.0 / d);
            }
            tb.knots.front() = x;
            tb.knots.back() = x1;
            tb.hi = x1;
            B.segments.push_back(std::move(tb));
          }
          x = std::isinf(piece_mass) ? kInf : x + piece_mass;
        }
      }
      if (std::isinf(x)) break;
      if (next_atom < seg.hi) {
        flush_plateau();
        push_zero_segment(A.atoms[ai].mass);
        ++ai;
        lo = next_atom;
        continue;
      }
      break;
    }
    if (std::isinf(x)) break;
  }

  if (std::isinf(x)) {
    // infinite total mass: B is an infinite (natural) string
    B.R = kInf;
    B.end = EndCondition::natural;
  } else if (!terminates) {
    // A runs to s = inf with finite mass (possibly an infinite trailing
    // plateau): B terminates at the total mass with a Dirichlet end
    pending_plateau = 0.0;
    B.R = x;
    B.end = EndCondition::dirichlet_at_R;
  } else if (pending_plateau > 0.0) {
    // a trailing plateau of a terminating string reflects to an atom at the
    // total mass; only the natural (zero-extension) form can carry it
    flush_plateau();
    DensitySegment tail;
    tail.lo = x;
    tail.hi = kInf;
    tail.family = Family::constant;
    tail.c = 0.0;
    B.segments.push_back(tail);
    B.R = kInf;
    B.end = EndCondition::natural;
  } else {
    // A is a terminating (dirichlet) string with finite mass
    B.R = x;
    B.end = EndCondition::neumann_at_R;
  }

  if (B.segments.empty()) {
    DensitySegment z;
    z.lo = 0.0;
    z.hi = B.R;
    z.family = Family::constant;
    z.c = 0.0;
    B.segments.push_back(z);
  }
  // close tiling gaps from float accumulation and clamp the last piece
  for (std::size_t i = 0; i + 1 < B.segments.size(); ++i)
    B.segments[i + 1].lo = B.segments[i].hi;
  if (std::isfinite(B.R)) {
    if (B.segments.back().hi != B.R) B.segments.back().hi = B.R;
    if (B.segments.back().family == Family::tabulated) B.segments.back().knots.back() = B.R;
  }
  B.validate();
  return B;
}

}  // namespace krein
