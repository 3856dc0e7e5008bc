#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "krein/string.hpp"

namespace krein {

// Variable accepted by the closed-form phi evaluator: the string coordinate s,
// the divergence-form coordinate t, or either (when sigma(t) = t).
enum class PhiVariable { s_side, t_side, both };

// A golden pair: a string (and, where known, its coefficient a(t)) together
// with closed forms for psi and, when available, phi.
struct CatalogEntry {
  std::string name;  // display name, e.g. "quasi_relativistic(m=1)"
  std::string base;  // family key accepted by lookup()
  std::vector<std::pair<std::string, double>> params;

  KreinString string;
  std::optional<CoefficientA> coeff;  // a(t), when a closed form exists

  std::function<double(double)> psi;          // psi(lambda), lambda >= 0
  std::function<double(double, double)> phi;  // phi(lambda, s or t); may be empty
  PhiVariable phi_var = PhiVariable::both;

  // density positive and locally Lipschitz on the open interval (0, R); gates
  // the strong Courant bound downstream
  bool positive_lipschitz = false;
};

// Known pairs:
//   classical                      A = 1,            psi = sqrt(lambda)
//   caffarelli_silvestre(alpha)    power density,    psi = lambda^(alpha/2)
//   quasi_relativistic(m)          (1+2ms)^-2,       psi = sqrt(m^2+lambda) - m
//   finite_dual(m)                 (1-2ms)^-2,       psi = sqrt(m^2+lambda) + m
//   shifted(mu)                    classical shifted: psi = sqrt(mu+lambda) - sqrt(mu)
//   water_waves_neumann(R)         1 on [0,R) + 0,   psi = sqrt(lambda) tanh(sqrt(lambda) R)
//   water_waves_dirichlet(R)       1 on [0,R),       psi = sqrt(lambda) coth(sqrt(lambda) R)
//   bessel(alpha)                  a(t) = (1-t)^(1-2 alpha), psi = sqrt(lambda) I_{alpha-1} / I_alpha
// Missing params take the defaults above (alpha = 1, m = 1, mu = 1, R = 1);
// unknown names and out-of-range params throw std::invalid_argument.
CatalogEntry lookup(const std::string& name, const std::vector<double>& params = {});

// shifted entry built on an arbitrary base with a t-side phi closed form:
// psi(lambda) = base.psi(mu + lambda) - base.psi(mu).
CatalogEntry shifted_entry(const CatalogEntry& base_entry, double mu);

// Every family at default parameters plus the caffarelli_silvestre / bessel
// parameter spreads used by the sweep suites.
std::vector<CatalogEntry> default_entries();

std::vector<std::string> catalog_names();

// I_nu for signed order via the reflection formula (integer orders fold to
// |nu|); needed by the bessel(alpha) characteristic for alpha < 1.
double bessel_i_signed(double nu, double x);

}  // namespace krein
