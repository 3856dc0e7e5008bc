#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "krein/string.hpp"

namespace krein {

// psi sampled on an increasing positive lambda grid.
struct PsiTable {
  std::vector<double> lambda_grid;
  std::vector<double> psi_values;
  std::string source;  // "string-derived" or a closed-form tag

  void validate() const;  // grid increasing positive; values finite, >= 0
};

// Per-lambda psi() over the grid; entries are independent and run in parallel.
PsiTable sample_psi(const KreinString& str, const std::vector<double>& lambda_grid);

// Table from a closed-form characteristic (catalog entries, counterexamples).
PsiTable sample_closed_form(const std::function<double(double)>& psi_fn,
                            const std::vector<double>& lambda_grid,
                            const std::string& tag);

struct CbfViolation {
  std::string condition;  // "nonnegative" | "nondecreasing" | "concave" | "ratio"
  std::size_t index;      // left grid index of the offending difference
  double magnitude;       // how far past tol
};

struct CbfReport {
  bool passed = true;
  double tol = 0.0;
  std::vector<CbfViolation> violations;
};

// Computable one-dimensional necessary conditions for a complete Bernstein
// function, up to tol on divided differences: psi >= 0, psi nondecreasing,
// psi concave, psi(lambda)/lambda nonincreasing.  Full complete monotonicity
// of psi' is not checkable from finitely many samples and is deliberately out
// of scope.  Requires >= 4 grid points.
CbfReport check_cbf(const PsiTable& table, double tol);

// CSV export: header "lambda,psi", 17 significant digits per value.
std::string to_csv(const PsiTable& table);

}  // namespace krein
