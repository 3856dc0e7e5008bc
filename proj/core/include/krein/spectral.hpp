#pragma once

#include <cstddef>
#include <vector>

#include "krein/extension.hpp"

namespace krein {

// psi(-Delta) + V on the periodic grid; the grid parameters come from V.
struct SpectralProblem {
  PsiSource source;  // multiplier: string, closed form, or the identity lambda
  GridFunction V;

  void validate() const;
};

struct EigenResult {
  std::vector<double> eigenvalues;  // mu_1 <= mu_2 <= ...
  // orthonormal in the grid inner product sum f g dx
  std::vector<GridFunction> eigenvectors;
  std::vector<double> residuals;  // ||H v - mu v||_2 per pair (coordinate norm)
};

// First row of the circulant realizing a frequency multiplier with slot values
// psi_m: h[d] = (1/n) sum_m psi_m cos(2 pi m d / n).  This pins the discrete
// convention, asymmetric nyquist slot included.
std::vector<double> multiplier_circulant(const std::vector<double>& psi_slots);

// Dense row-major H = U* diag(psi(xi^2)) U + diag(V), symmetrized exactly.
std::vector<double> build_operator(const SpectralProblem& pb);

// Full eigendecomposition of a symmetric matrix: Householder tridiagonalization
// followed by implicit-shift QL.  values come back ascending; vectors[i*n+j] is
// component i of eigenvector j (orthonormal columns); the sign is fixed by
// making the largest-magnitude component positive.  Deterministic given h.
void symmetric_eigen(std::vector<double> h, std::size_t n,
                     std::vector<double>& values, std::vector<double>& vectors);

// First k eigenpairs of the problem operator.
EigenResult eigensolve(const SpectralProblem& pb, std::size_t k);

// gamma = 1 / int_0^R phi_lambda^2 A(ds), the equality case of the comparison
// condition gamma int A phi_lambda^2 >= 1.
double bound_gamma(const KreinString& str, double lambda, const PsiOptions& opt = {});

// Eigenvalue comparison: mu_n of psi(-Delta) + V against psi(lambda), where n
// is the number of eigenvalues of -Delta + gamma V not exceeding lambda.
struct TheoremEstReport {
  double lambda = 0.0;
  double psi_lambda = 0.0;
  double gamma = 0.0;
  std::vector<double> comparison_eigenvalues;  // leading lambda_n of -Delta + gamma V
  std::size_t n_comparison = 0;  // largest n with lambda_n <= lambda
  double mu_n = 0.0;             // n-th eigenvalue of psi(-Delta) + V
  double slack = 0.0;            // psi(lambda) - mu_n
  bool vacuous = false;          // no comparison eigenvalue at or below lambda
  bool passed = false;
};

TheoremEstReport check_theorem_est(const KreinString& str, const GridFunction& V,
                                   double lambda, const PsiOptions& opt = {});

// mu_n of (-Delta)^{alpha/2} + |x|^p against lambda_n^{(2+p) alpha / (2 alpha + 2p)}
// with lambda_n from -Delta + |x|^p; informational (the bound is recorded per n,
// not asserted).
struct HomogeneousBoundRow {
  std::size_t n = 0;
  double mu_n = 0.0;
  double lambda_n = 0.0;
  double bound = 0.0;
  bool holds = false;
};

struct HomogeneousBoundReport {
  double alpha = 0.0;
  double p = 0.0;
  double exponent = 0.0;
  std::vector<HomogeneousBoundRow> rows;
};

HomogeneousBoundReport homogeneous_bound_report(double alpha, double p,
                                                std::size_t n, double X);

}  // namespace krein
