#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace krein {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Family { constant, power, rational_power, exponential, tabulated };
enum class EndCondition { natural, dirichlet_at_R, neumann_at_R };

// One density piece of a string measure A(ds) on [lo, hi).
//
//   constant         A(s) = c
//   power            A(s) = c * (s - lo)^p,     p > -1 (integrable singularity at lo)
//   rational_power   A(s) = c * (1 + q*s)^r     (global coordinate; 1+q*s > 0 inside)
//   exponential      A(s) = c * exp(q*s)        (global coordinate)
//   tabulated        linear interpolation of (knots, values), knots span [lo, hi]
//
// hi may be +inf for the final piece of an infinite string.
struct DensitySegment {
  double lo = 0.0;
  double hi = kInf;
  Family family = Family::constant;
  double c = 1.0;
  double p = 0.0;  // power exponent
  double q = 0.0;  // rational/exponential rate
  double r = 0.0;  // rational exponent
  std::vector<double> knots;   // tabulated only
  std::vector<double> values;  // tabulated only

  double density(double s) const;
  // Exact integral of A over [a, b] within this segment.
  double mass(double a, double b) const;
  // Exact integral of A(s) * (s - center)^k over [a, b], k <= 4.
  double moment(double a, double b, double center, int k) const;
  // Exact integral of sqrt(A) over [a, b] (used for the t-variable change).
  double sqrt_mass(double a, double b) const;
  // True if the density is identically zero on the segment.
  bool is_zero() const;
  // True if A is unbounded as s -> hi- (rational piece with 1+q*hi == 0, r < 0).
  bool singular_at_hi() const;

  void validate(bool is_last, double R) const;
};

struct Atom {
  double s = 0.0;
  double mass = 0.0;
};

// A Krein string: locally finite measure A(ds) = density + atoms on [0, R),
// together with the behaviour at the right end.
//
//   natural         R = +inf
//   dirichlet_at_R  the string terminates at the finite R (phi_lambda(R) = 0;
//                   automatic when the moment integral (R-s) A(ds) diverges)
//   neumann_at_R    the string is extended by zero density on [R, inf)
struct KreinString {
  std::vector<DensitySegment> segments;  // ordered, tiling [0, R)
  std::vector<Atom> atoms;               // ordered, positions in [0, R)
  double R = kInf;
  EndCondition end = EndCondition::natural;

  void validate() const;

  double density(double s) const;
  // Largest structural coordinate: beyond it the density is identically zero
  // (finite strings: R). Atom positions count as structure.
  double last_feature() const;
  // Total mass A([0, R)); may be +inf.
  double total_mass() const;
  // Whether the moment integral (R - s) A(ds) converges near R (finite R only).
  bool moment_at_R_finite() const;
  bool has_atoms() const { return !atoms.empty(); }
};

// A([0, s)) = integral of the density over [0, s) plus the masses of atoms at
// positions strictly below s. Requires 0 <= s <= R.
double cumulative_mass(const KreinString& str, double s);

// Coefficient a(t) of the divergence-form operator on (0, r), same family menu
// in the t variable (no atoms). r may be +inf (not for tabulated pieces).
struct CoefficientA {
  std::vector<DensitySegment> segments;  // reuse the segment model for a(t)
  double r = kInf;

  void validate() const;
  double value(double t) const;
};

// Time change t -> s = sigma(t) = int_0^t a(u)^-1 du; returns the string with
// A(sigma(t)) = a(t)^2.  End condition for finite R: dirichlet_at_R when a is
// not integrable over [0, r), neumann_at_R when it is; natural when R = inf.
// An explicit override wins when provided.
KreinString from_coefficient_a(const CoefficientA& coeff, std::size_t n_knots = 400,
                               std::optional<EndCondition> end_override = std::nullopt);

// Inverse change of variables: t(s) = int_0^s sqrt(A) du, a(t) = sqrt(A(s(t))).
// Requires a purely absolutely continuous string with a.e. positive density;
// result is tabulated on n_knots geometric knots (bisection tolerance 1e-12).
CoefficientA to_coefficient_a(const KreinString& str, std::size_t n_knots = 400);

// Dual string under inversion of the distribution function (left-continuous
// generalized inverse): psi_B(lambda) = lambda / psi_A(lambda).  Plateaus of A
// become atoms of B and vice versa; closed-form families invert in closed form
// where the normalisation allows, otherwise pieces fall back to tabulated.
KreinString complementary(const KreinString& str);

// Shifted coefficient b(t) = a(t) * phi_mu(sigma(t))^2, tabulated;
// psi_b(lambda) = psi_a(mu + lambda) - psi_a(mu).
CoefficientA shift_string(const CoefficientA& coeff, double mu, double tol = 1e-9,
                          std::size_t n_knots = 2000);

// sigma(t) = int_0^t a(u)^-1 du evaluated in closed form per piece.
double sigma_of_t(const CoefficientA& coeff, double t);

const char* family_name(Family f);
const char* end_name(EndCondition e);

}  // namespace krein
