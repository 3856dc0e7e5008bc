#pragma once

#include <cstddef>
#include <vector>

#include "krein/string.hpp"

namespace krein {

// Fundamental solutions of f'' = lambda A f on [0, s_max]:
//   f_N(0) = 1, f_N'(0) = 0   (neumann solution)
//   f_D(0) = 0, f_D'(0) = 1   (dirichlet solution)
// Derivatives are right derivatives; at an atom of mass m the derivative jumps
// by lambda * m * f.  Values are stored at knots together with a per-knot
// log-scale so that f = value * exp(log_scale) survives exponential growth.
struct StringSolution {
  double lambda = 0.0;
  std::vector<double> s;          // knots, increasing, s[0] = 0
  std::vector<double> fn, fnp;    // f_N and its right derivative (scaled)
  std::vector<double> fd, fdp;    // f_D and its right derivative (scaled)
  std::vector<double> log_scale;  // common log-scale per knot

  double fn_at(std::size_t i) const;   // unscaled f_N(s[i]) (may overflow)
  double ratio_at(std::size_t i) const;  // f_D/f_N at knot i (scale free)
};

// March the fundamental pair over [0, s_max], recording every internal step.
StringSolution solve_fundamental(const KreinString& str, double lambda, double s_max);

struct PsiOptions {
  double tol = 1e-10;        // relative tolerance on psi
  double eta = 0.025;        // rk4 phase step control: h <= eta / sqrt(lambda A)
  double s_max_cap = 1e9;    // adaptive doubling cap before accuracy_error
};

// psi(lambda) of the string: spectral function of the Krein correspondence,
// psi > 0 for lambda > 0 on non-trivial strings, psi(0) = 1/R (0 when R = inf).
double psi(const KreinString& str, double lambda, const PsiOptions& opt = {});

// Limit psi(0+) = 1/R: positive exactly for terminating strings.
double psi_at_zero(const KreinString& str);

// The decreasing solution phi_lambda (phi(0) = 1, phi = f_N - psi f_D),
// sampled on the marching knots; clamp records where cancellation between the
// two fundamental solutions exhausted the available digits.
struct PhiProfile {
  double lambda = 0.0;
  double psi_value = 0.0;
  std::vector<double> s;
  std::vector<double> phi;
  std::vector<double> dphi;     // right derivative
  std::vector<double> dphi_in;  // left derivative (differs from dphi at atoms)
  bool clamped = false;      // some values clamped to 0 after cancellation
  double clamp_from = kInf;  // smallest s where clamping occurred

  // cubic hermite between knots (exact at knots); beyond the last knot the
  // profile continues linearly, floored at zero
  double value(double sq) const;
};

PhiProfile phi(const KreinString& str, double lambda, const PsiOptions& opt = {});

// int phi_lambda^2 A(ds) = psi'(lambda), the mass integral of the minimizer.
double phi_mass_integral(const KreinString& str, double lambda, const PsiOptions& opt = {});

// Dirichlet energy of the minimizer: int (phi')^2 ds + lambda int phi^2 A(ds).
// Evaluates to psi(lambda) up to quadrature error.
double profile_energy(const KreinString& str, const PhiProfile& prof);

// Energy of an arbitrary piecewise-linear competitor f with f(0) = 1, given by
// (nodes, values); f is extended constant after the last node.  Exact.
double string_energy(const KreinString& str, double lambda,
                     const std::vector<double>& nodes, const std::vector<double>& values);

// b(t) = a(t) phi_mu(sigma(t))^2 is implemented here (needs phi), declared in
// string.hpp next to the other coefficient transforms.

}  // namespace krein
