#include "krein/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "krein/errors.hpp"
#include "krein/util.hpp"

namespace krein {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Householder reduction to tridiagonal form with accumulated transforms
// (z holds the symmetric input, comes back as the orthogonal basis Q).
void tred2(std::vector<double>& z, std::size_t n, std::vector<double>& d,
           std::vector<double>& e) {
  auto a = [&](std::size_t i, std::size_t j) -> double& { return z[i * n + j]; };
  for (std::size_t i = n - 1; i >= 1; --i) {
    const std::size_t l = i - 1;
    double h = 0.0;
    if (l > 0) {
      double scale = 0.0;
      for (std::size_t k = 0; k <= l; ++k) scale += std::abs(a(i, k));
      if (scale == 0.0) {
        e[i] = a(i, l);
      } else {
        for (std::size_t k = 0; k <= l; ++k) {
          a(i, k) /= scale;
          h += a(i, k) * a(i, k);
        }
        double f = a(i, l);
        double g = f >= 0.0 ? -std::sqrt(h) : std::sqrt(h);
        e[i] = scale * g;
        h -= f * g;
        a(i, l) = f - g;
        f = 0.0;
        for (std::size_t j = 0; j <= l; ++j) {
          a(j, i) = a(i, j) / h;
          g = 0.0;
          for (std::size_t k = 0; k <= j; ++k) g += a(j, k) * a(i, k);
          for (std::size_t k = j + 1; k <= l; ++k) g += a(k, j) * a(i, k);
          e[j] = g / h;
          f += e[j] * a(i, j);
        }
        const double hh = f / (h + h);
        for (std::size_t j = 0; j <= l; ++j) {
          f = a(i, j);
          const double ej = e[j] - hh * f;
          e[j] = ej;
          for (std::size_t k = 0; k <= j; ++k)
            a(j, k) -= f * e[k] + ej * a(i, k);
        }
      }
    } else {
      e[i] = a(i, l);
    }
    d[i] = h;
  }
  d[0] = 0.0;
  e[0] = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (d[i] != 0.0) {
      for (std::size_t j = 0; j < i; ++j) {
        double g = 0.0;
        for (std::size_t k = 0; k < i; ++k) g += a(i, k) * a(k, j);
        for (std::size_t k = 0; k < i; ++k) a(k, j) -= g * a(k, i);
      }
    }
    d[i] = a(i, i);
    a(i, i) = 1.0;
    for (std::size_t j = 0; j < i; ++j) a(j, i) = a(i, j) = 0.0;
  }
}

// Implicit-shift QL on the tridiagonal (d, e), rotating the columns of z.
void tql2(std::vector<double>& d, std::vector<double>& e, std::vector<double>& z,
          std::size_t n) {
  auto a = [&](std::size_t i, std::size_t j) -> double& { return z[i * n + j]; };
  for (std::size_t i = 1; i < n; ++i) e[i - 1] = e[i];
  e[n - 1] = 0.0;
  for (std::size_t l = 0; l < n; ++l) {
    int iter = 0;
    std::size_t m;
    do {
      for (m = l; m + 1 < n; ++m) {
        const double dd = std::abs(d[m]) + std::abs(d[m + 1]);
        if (std::abs(e[m]) <= std::numeric_limits<double>::epsilon() * dd) break;
      }
      if (m != l) {
        if (++iter == 50)
          throw accuracy_error("eigensolver: QL iteration failed to converge", d[l]);
        double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
        double r = std::hypot(g, 1.0);
        g = d[m] - d[l] + e[l] / (g + std::copysign(r, g));
        double s = 1.0, c = 1.0, p = 0.0;
        bool underflow = false;
        for (std::size_t i = m; i-- > l;) {
          double f = s * e[i];
          const double b = c * e[i];
          r = std::hypot(f, g);
          e[i + 1] = r;
          if (r == 0.0) {
            d[i + 1] -= p;
            e[m] = 0.0;
            underflow = true;
            break;
          }
          s = f / r;
          c = g / r;
          g = d[i + 1] - p;
          r = (d[i] - g) * s + 2.0 * c * b;
          p = s * r;
          d[i + 1] = g + p;
          g = c * r - b;
          for (std::size_t k = 0; k < n; ++k) {
            f = a(k, i + 1);
            a(k, i + 1) = s * a(k, i) + c * f;
            a(k, i) = c * a(k, i) - s * f;
          }
        }
        if (!underflow) {
          d[l] -= p;
          e[l] = g;
          e[m] = 0.0;
        }
      }
    } while (m != l);
  }
}

std::vector<double> psi_slots(const PsiSource& src, std::size_t n, double X) {
  std::vector<double> lam(n / 2 + 1);
  for (std::size_t m = 0; m <= n / 2; ++m) {
    const double xi = kPi * static_cast<double>(m) / X;
    lam[m] = xi * xi;
  }
  src.prepare(lam, /*with_profiles=*/false);
  std::vector<double> out(n);
  for (std::size_t m = 0; m < n; ++m)
    out[m] = src.psi(lam[std::min(m, n - m)]);
  return out;
}

GridFunction abs_power_potential(double p, std::size_t n, double X) {
  return grid_from(n, X, [p](double x) { return std::pow(std::abs(x), p); });
}

}  // namespace

void SpectralProblem::validate() const { V.validate(); }

std::vector<double> multiplier_circulant(const std::vector<double>& psi_slots) {
  const std::size_t n = psi_slots.size();
  if (n == 0) throw std::invalid_argument("multiplier circulant: empty slot list");
  std::vector<double> h(n, 0.0);
  for (std::size_t d = 0; d < n; ++d) {
    double acc = 0.0;
    for (std::size_t m = 0; m < n; ++m)
      acc += psi_slots[m] *
             std::cos(2.0 * kPi * static_cast<double>(m * d % n) / static_cast<double>(n));
    h[d] = acc / static_cast<double>(n);
  }
  return h;
}

std::vector<double> build_operator(const SpectralProblem& pb) {
  pb.validate();
  const std::size_t n = pb.V.n;
  const std::vector<double> h = multiplier_circulant(psi_slots(pb.source, n, pb.V.X));
  std::vector<double> H(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      H[i * n + j] = h[(i + n - j) % n];
  for (std::size_t i = 0; i < n; ++i) H[i * n + i] += pb.V.values[i];
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j) {
      const double sym = 0.5 * (H[i * n + j] + H[j * n + i]);
      H[i * n + j] = H[j * n + i] = sym;
    }
  return H;
}

void symmetric_eigen(std::vector<double> h, std::size_t n,
                     std::vector<double>& values, std::vector<double>& vectors) {
  if (n == 0 || h.size() != n * n)
    throw std::invalid_argument("symmetric_eigen: size mismatch");
  std::vector<double> d(n, 0.0), e(n, 0.0);
  if (n == 1) {
    values = {h[0]};
    vectors = {1.0};
    return;
  }
  tred2(h, n, d, e);
  tql2(d, e, h, n);

  // ascending order, stable in the original index
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return d[a] < d[b]; });
  values.assign(n, 0.0);
  vectors.assign(n * n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    values[j] = d[idx[j]];
    // sign convention: the largest-magnitude component is positive
    std::size_t arg = 0;
    double best = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double v = std::abs(h[i * n + idx[j]]);
      if (v > best) {
        best = v;
        arg = i;
      }
    }
    const double flip = h[arg * n + idx[j]] < 0.0 ? -1.0 : 1.0;
    for (std::size_t i = 0; i < n; ++i)
      vectors[i * n + j] = flip * h[i * n + idx[j]];
  }
}

EigenResult eigensolve(const SpectralProblem& pb, std::size_t k) {
  pb.validate();
  const std::size_t n = pb.V.n;
  if (k == 0 || k > n)
    throw std::invalid_argument("eigensolve: k must be in [1, n]");
  const std::vector<double> H = build_operator(pb);
  std::vector<double> values, vectors;
  symmetric_eigen(H, n, values, vectors);

  const double hnorm =
      std::max(std::abs(values.front()), std::abs(values.back()));
  EigenResult res;
  res.eigenvalues.assign(values.begin(), values.begin() + k);
  res.eigenvectors.reserve(k);
  res.residuals.reserve(k);
  const double scale = 1.0 / std::sqrt(2.0 * pb.V.X / static_cast<double>(n));
  for (std::size_t j = 0; j < k; ++j) {
    GridFunction f = make_grid(n, pb.V.X);
    for (std::size_t i = 0; i < n; ++i)
      f.values[i] = scale * vectors[i * n + j];
    res.eigenvectors.push_back(std::move(f));

    double rr = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double hv = 0.0;
      for (std::size_t l = 0; l < n; ++l) hv += H[i * n + l] * vectors[l * n + j];
      const double r = hv - values[j] * vectors[i * n + j];
      rr += r * r;
    }
    res.residuals.push_back(std::sqrt(rr));
    if (res.residuals.back() > 1e-8 * std::max(hnorm, 1.0))
      throw accuracy_error("eigensolve: residual above tolerance", values[j]);
  }
  return res;
}

double bound_gamma(const KreinString& str, double lambda, const PsiOptions& opt) {
  if (!(lambda > 0.0)) throw std::invalid_argument("bound_gamma: lambda must be > 0");
  return 1.0 / phi_mass_integral(str, lambda, opt);
}

TheoremEstReport check_theorem_est(const KreinString& str, const GridFunction& V,
                                   double lambda, const PsiOptions& opt) {
  V.validate();
  TheoremEstReport rep;
  rep.lambda = lambda;
  rep.psi_lambda = psi(str, lambda, opt);
  rep.gamma = bound_gamma(str, lambda, opt);

  GridFunction gV = V;
  for (double& v : gV.values) v *= rep.gamma;
  SpectralProblem comparison{PsiSource::laplacian(), gV};
  std::vector<double> lam_values, lam_vectors;
  symmetric_eigen(build_operator(comparison), V.n, lam_values, lam_vectors);

  std::size_t count = 0;
  while (count < lam_values.size() && lam_values[count] <= lambda) ++count;
  rep.n_comparison = count;
  const std::size_t keep = std::min<std::size_t>(V.n, std::max<std::size_t>(count + 3, 12));
  rep.comparison_eigenvalues.assign(lam_values.begin(), lam_values.begin() + keep);

  if (count == 0) {
    rep.vacuous = true;
    rep.passed = true;
    rep.slack = rep.psi_lambda;
    return rep;
  }
  SpectralProblem main{PsiSource::from_string(str, opt), V};
  std::vector<double> mu_values, mu_vectors;
  symmetric_eigen(build_operator(main), V.n, mu_values, mu_vectors);
  rep.mu_n = mu_values[count - 1];
  rep.slack = rep.psi_lambda - rep.mu_n;
  rep.passed = rep.mu_n <= rep.psi_lambda * (1.0 + 1e-6);
  return rep;
}

HomogeneousBoundReport homogeneous_bound_report(double alpha, double p,
                                                std::size_t n, double X) {
  if (!(alpha > 0.0) || alpha > 2.0)
    throw std::invalid_argument("homogeneous bound: alpha must be in (0, 2]");
  if (!(p > 0.0)) throw std::invalid_argument("homogeneous bound: p must be > 0");
  HomogeneousBoundReport rep;
  rep.alpha = alpha;
  rep.p = p;
  rep.exponent = (2.0 + p) * alpha / (2.0 * alpha + 2.0 * p);

  const GridFunction V = abs_power_potential(p, n, X);
  SpectralProblem lap{PsiSource::laplacian(), V};
  PsiSource frac = PsiSource::closed_form(
      "fractional", [alpha](double lam) { return std::pow(lam, 0.5 * alpha); }, 0.0);
  SpectralProblem main{frac, V};

  std::vector<double> lam_values, lam_vectors, mu_values, mu_vectors;
  symmetric_eigen(build_operator(lap), n, lam_values, lam_vectors);
  symmetric_eigen(build_operator(main), n, mu_values, mu_vectors);

  const std::size_t rows = std::min<std::size_t>(8, n);
  for (std::size_t i = 0; i < rows; ++i) {
    HomogeneousBoundRow row;
    row.n = i + 1;
    row.mu_n = mu_values[i];
    row.lambda_n = lam_values[i];
    row.bound = std::pow(lam_values[i], rep.exponent);
    row.holds = row.mu_n <= row.bound * (1.0 + 1e-9);
    rep.rows.push_back(row);
  }
  return rep;
}

}  // namespace krein
