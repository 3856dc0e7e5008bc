#include "krein/cbf.hpp"

#include <cmath>
#include <stdexcept>

#include "krein/ode.hpp"
#include "krein/util.hpp"

namespace krein {

void PsiTable::validate() const {
  if (lambda_grid.size() != psi_values.size())
    throw std::invalid_argument("psi table: grid/value size mismatch");
  for (std::size_t i = 0; i < lambda_grid.size(); ++i) {
    if (!(lambda_grid[i] > 0.0) || !std::isfinite(lambda_grid[i]))
      throw std::invalid_argument("psi table: grid must be positive and finite");
    if (i && !(lambda_grid[i] > lambda_grid[i - 1]))
      throw std::invalid_argument("psi table: grid must be strictly increasing");
    if (!std::isfinite(psi_values[i]) || psi_values[i] < 0.0)
      throw std::invalid_argument("psi table: values must be finite and nonnegative");
  }
}

PsiTable sample_psi(const KreinString& str, const std::vector<double>& lambda_grid) {
  PsiTable out;
  out.lambda_grid = lambda_grid;
  out.psi_values.assign(lambda_grid.size(), 0.0);
  out.source = "string-derived";
  parallel_for(lambda_grid.size(),
               [&](std::size_t i) { out.psi_values[i] = psi(str, lambda_grid[i]); });
  out.validate();
  return out;
}

PsiTable sample_closed_form(const std::function<double(double)>& psi_fn,
                            const std::vector<double>& lambda_grid,
                            const std::string& tag) {
  PsiTable out;
  out.lambda_grid = lambda_grid;
  out.psi_values.reserve(lambda_grid.size());
  for (double lam : lambda_grid) out.psi_values.push_back(psi_fn(lam));
  out.source = tag;
  out.validate();
  return out;
}

CbfReport check_cbf(const PsiTable& table, double tol) {
  table.validate();
  const std::vector<double>& lam = table.lambda_grid;
  const std::vector<double>& ps = table.psi_values;
  if (lam.size() < 4) throw std::invalid_argument("check_cbf: need at least 4 samples");

  CbfReport rep;
  rep.tol = tol;
  auto flag = [&](const char* cond, std::size_t i, double mag) {
    rep.passed = false;
    rep.violations.push_back({cond, i, mag});
  };

  for (std::size_t i = 0; i < lam.size(); ++i)
    if (ps[i] < -tol) flag("nonnegative", i, -ps[i]);

  std::vector<double> dd1(lam.size() - 1);
  for (std::size_t i = 0; i + 1 < lam.size(); ++i) {
    dd1[i] = (ps[i + 1] - ps[i]) / (lam[i + 1] - lam[i]);
    if (dd1[i] < -tol) flag("nondecreasing", i, -dd1[i]);
  }

  for (std::size_t i = 0; i + 2 < lam.size(); ++i) {
    double dd2 = (dd1[i + 1] - dd1[i]) / (lam[i + 2] - lam[i]);
    if (dd2 > tol) flag("concave", i, dd2);
  }

  for (std::size_t i = 0; i + 1 < lam.size(); ++i) {
    double rr = (ps[i + 1] / lam[i + 1] - ps[i] / lam[i]) / (lam[i + 1] - lam[i]);
    if (rr > tol) flag("ratio", i, rr);
  }
  return rep;
}

std::string to_csv(const PsiTable& table) {
  std::string out = "lambda,psi\n";
  for (std::size_t i = 0; i < table.lambda_grid.size(); ++i) {
    out += format_g17(table.lambda_grid[i]);
    out += ',';
    out += format_g17(table.psi_values[i]);
    out += '\n';
  }
  return out;
}

}  // namespace krein
