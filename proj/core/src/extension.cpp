#include "krein/extension.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <set>
#include <sstream>
#include <stdexcept>
#include <utility>

#include "krein/util.hpp"

namespace krein {

namespace {

constexpr double kPi = 3.14159265358979323846;

// distinct xi^2 values of the frequency set: slots m and n-m share |xi|
std::vector<double> distinct_lambdas(std::size_t n, double X) {
  std::vector<double> out(n / 2 + 1);
  for (std::size_t m = 0; m <= n / 2; ++m) {
    const double xi = kPi * static_cast<double>(m) / X;
    out[m] = xi * xi;
  }
  return out;
}

// weights of the second-order derivative at x0 on the stencil {xa, xb, xc}
struct Stencil {
  double wa, wb, wc;
};

Stencil derivative_weights(double x0, double xa, double xb, double xc) {
  return {(2.0 * x0 - xb - xc) / ((xa - xb) * (xa - xc)),
          (2.0 * x0 - xa - xc) / ((xb - xa) * (xb - xc)),
          (2.0 * x0 - xa - xb) / ((xc - xa) * (xc - xb))};
}

}  // namespace

struct PsiSource::StringCache {
  KreinString str;
  PsiOptions opt;
  bool dirichlet = false;
  mutable std::mutex mu;
  mutable std::map<double, std::shared_ptr<const PhiProfile>> profiles;
  mutable std::map<double, double> psi_vals;
};

PsiSource::PsiSource()
    : tag_("laplacian"), psi_fn_([](double lam) { return lam; }), psi0_(0.0) {}

PsiSource PsiSource::laplacian() { return PsiSource(); }

PsiSource PsiSource::from_string(KreinString str, PsiOptions opt) {
  str.validate();
  PsiSource src;
  src.tag_ = "string";
  src.psi_fn_ = {};
  src.psi0_ = psi_at_zero(str);
  src.cache_ = std::make_shared<StringCache>();
  src.cache_->str = std::move(str);
  src.cache_->opt = opt;
  src.cache_->dirichlet = src.cache_->str.end == EndCondition::dirichlet_at_R;
  return src;
}

PsiSource PsiSource::closed_form(std::string tag, std::function<double(double)> psi,
                                 double psi0,
                                 std::function<double(double, double)> phi) {
  if (!psi) throw std::invalid_argument("psi source: closed form needs psi");
  PsiSource src;
  src.tag_ = std::move(tag);
  src.psi_fn_ = std::move(psi);
  src.phi_fn_ = std::move(phi);
  src.psi0_ = psi0;
  return src;
}

PsiSource PsiSource::from_entry(const CatalogEntry& entry, PsiOptions opt) {
  PsiSource src = from_string(entry.string, opt);
  src.tag_ = entry.name;
  src.psi_fn_ = entry.psi;  // closed-form multiplier, string-backed profiles
  src.positive_lipschitz_ = entry.positive_lipschitz;
  return src;
}

double PsiSource::psi(double lambda) const {
  if (!(lambda >= 0.0))
    throw std::invalid_argument("psi source: lambda must be >= 0");
  if (lambda == 0.0) return psi0_;
  if (psi_fn_) return psi_fn_(lambda);
  {
    std::lock_guard<std::mutex> lk(cache_->mu);
    auto it = cache_->psi_vals.find(lambda);
    if (it != cache_->psi_vals.end()) return it->second;
  }
  const double v = krein::psi(cache_->str, lambda, cache_->opt);
  std::lock_guard<std::mutex> lk(cache_->mu);
  cache_->psi_vals.emplace(lambda, v);
  return v;
}

double PsiSource::phi(double lambda, double s) const {
  if (!(lambda >= 0.0) || !(s >= 0.0))
    throw std::invalid_argument("psi source: phi needs lambda >= 0, s >= 0");
  if (phi_fn_) return phi_fn_(lambda, s);
  if (!cache_) throw std::logic_error("psi source: no profile information");
  if (lambda == 0.0)
    return cache_->dirichlet ? 1.0 - s / cache_->str.R : 1.0;
  std::shared_ptr<const PhiProfile> prof;
  {
    std::lock_guard<std::mutex> lk(cache_->mu);
    auto it = cache_->profiles.find(lambda);
    if (it != cache_->profiles.end()) prof = it->second;
  }
  if (!prof) {
    auto fresh = std::make_shared<const PhiProfile>(
        krein::phi(cache_->str, lambda, cache_->opt));
    std::lock_guard<std::mutex> lk(cache_->mu);
    auto [it, inserted] = cache_->profiles.emplace(lambda, fresh);
    if (inserted) cache_->psi_vals.emplace(lambda, fresh->psi_value);
    prof = it->second;
  }
  return prof->value(s);
}

bool PsiSource::has_phi() const { return static_cast<bool>(phi_fn_) || cache_ != nullptr; }

void PsiSource::prepare(const std::vector<double>& lambdas, bool with_profiles) const {
  if (!cache_) return;
  std::set<double> need;
  {
    std::lock_guard<std::mutex> lk(cache_->mu);
    for (double lam : lambdas) {
      if (!(lam > 0.0)) continue;
      const bool have = with_profiles ? cache_->profiles.count(lam) > 0
                                      : cache_->psi_vals.count(lam) > 0;
      if (!have) need.insert(lam);
    }
  }
  if (need.empty()) return;
  const std::vector<double> work(need.begin(), need.end());
  if (with_profiles) {
    std::vector<std::shared_ptr<const PhiProfile>> out(work.size());
    parallel_for(work.size(), [&](std::size_t i) {
      out[i] = std::make_shared<const PhiProfile>(
          krein::phi(cache_->str, work[i], cache_->opt));
    });
    std::lock_guard<std::mutex> lk(cache_->mu);
    for (std::size_t i = 0; i < work.size(); ++i) {
      cache_->profiles.emplace(work[i], out[i]);
      cache_->psi_vals.emplace(work[i], out[i]->psi_value);
    }
  } else {
    std::vector<double> out(work.size());
    parallel_for(work.size(), [&](std::size_t i) {
      out[i] = krein::psi(cache_->str, work[i], cache_->opt);
    });
    std::lock_guard<std::mutex> lk(cache_->mu);
    for (std::size_t i = 0; i < work.size(); ++i)
      cache_->psi_vals.emplace(work[i], out[i]);
  }
}

double PsiSource::profile_end() const {
  if (cache_ && cache_->dirichlet) return cache_->str.R;
  return kInf;
}

const KreinString* PsiSource::string() const {
  return cache_ ? &cache_->str : nullptr;
}

void HalfSpaceField::validate() const {
  if (s_levels.empty() || s_levels.front() != 0.0)
    throw std::invalid_argument("half-space field: s-levels must start at 0");
  for (std::size_t l = 0; l + 1 < s_levels.size(); ++l)
    if (!(s_levels[l] < s_levels[l + 1]))
      throw std::invalid_argument("half-space field: s-levels must increase");
  if (!std::isfinite(s_levels.back()))
    throw std::invalid_argument("half-space field: non-finite s-level");
  if (values.size() != s_levels.size())
    throw std::invalid_argument("half-space field: one row per s-level required");
  for (const auto& rowv : values) {
    if (rowv.size() != n)
      throw std::invalid_argument("half-space field: row length must equal n");
    for (double v : rowv)
      if (!std::isfinite(v))
        throw std::invalid_argument("half-space field: non-finite value");
  }
  make_grid(n, X);  // validates the grid parameters
}

GridFunction HalfSpaceField::row(std::size_t level) const {
  if (level >= values.size())
    throw std::out_of_range("half-space field: level out of range");
  return GridFunction{n, X, values[level]};
}

std::vector<double> default_s_levels(double s_max, std::size_t count) {
  if (!(s_max > 0.0) || !std::isfinite(s_max))
    throw std::invalid_argument("s-levels: s_max must be positive finite");
  if (count < 3) throw std::invalid_argument("s-levels: need at least 3 levels");
  std::vector<double> out{0.0};
  const std::vector<double> tail = geometric_grid(1e-4 * s_max, s_max, count - 1);
  out.insert(out.end(), tail.begin(), tail.end());
  return out;
}

HalfSpaceField harmonic_extension(const PsiSource& src, const GridFunction& f,
                                  const std::vector<double>& s_levels) {
  f.validate();
  if (!src.has_phi())
    throw std::logic_error("harmonic extension: source has no profiles");
  if (s_levels.empty() || s_levels.front() != 0.0)
    throw std::invalid_argument("harmonic extension: s-levels must start at 0");
  for (std::size_t l = 0; l + 1 < s_levels.size(); ++l)
    if (!(s_levels[l] < s_levels[l + 1]))
      throw std::invalid_argument("harmonic extension: s-levels must increase");
  if (!(s_levels.back() < src.profile_end()))
    throw std::invalid_argument("harmonic extension: s-levels must stay below R");

  const std::size_t n = f.n;
  const std::vector<double> lambdas = distinct_lambdas(n, f.X);
  src.prepare(lambdas, /*with_profiles=*/true);

  const std::vector<std::complex<double>> c = forward(f);
  HalfSpaceField u;
  u.s_levels = s_levels;
  u.n = n;
  u.X = f.X;
  u.values.assign(s_levels.size(), {});
  parallel_for(s_levels.size(), [&](std::size_t l) {
    std::vector<std::complex<double>> cl(n);
    for (std::size_t m = 0; m < n; ++m) {
      const std::size_t fold = std::min(m, n - m);
      cl[m] = c[m] * src.phi(lambdas[fold], s_levels[l]);
    }
    u.values[l] = inverse(cl, f.X).values;
  });
  u.validate();
  return u;
}

GridFunction dtn_apply(const PsiSource& src, const GridFunction& f) {
  f.validate();
  src.prepare(distinct_lambdas(f.n, f.X), /*with_profiles=*/false);
  return apply_multiplier(f, [&src](double lam) { return src.psi(lam); });
}

double form_boundary(const PsiSource& src, const GridFunction& f) {
  f.validate();
  src.prepare(distinct_lambdas(f.n, f.X), /*with_profiles=*/false);
  const std::vector<std::complex<double>> c = forward(f);
  double total = 0.0;
  for (std::size_t m = 0; m < f.n; ++m) {
    const double xi = slot_xi(m, f.n, f.X);
    total += src.psi(xi * xi) * std::norm(c[m]);
  }
  return total * (kPi / f.X);
}

double form_halfspace(const KreinString& str, const HalfSpaceField& u) {
  u.validate();
  const std::size_t levels = u.s_levels.size();
  if (levels < 3)
    throw std::domain_error("form_halfspace: need at least 3 s-levels");
  const std::vector<double>& s = u.s_levels;
  const double dx = 2.0 * u.X / static_cast<double>(u.n);
  const double dxi = kPi / u.X;

  // per-level sum_j (ds u)^2 dx (3-point differences) and sum xi^2 |u_hat|^2 dxi
  std::vector<double> w(levels, 0.0), dirich(levels, 0.0);
  parallel_for(levels, [&](std::size_t l) {
    const std::size_t a = l == 0 ? 0 : (l == levels - 1 ? levels - 3 : l - 1);
    const Stencil st = derivative_weights(s[l], s[a], s[a + 1], s[a + 2]);
    double acc = 0.0;
    for (std::size_t j = 0; j < u.n; ++j) {
      const double d = st.wa * u.values[a][j] + st.wb * u.values[a + 1][j] +
                       st.wc * u.values[a + 2][j];
      acc += d * d;
    }
    w[l] = acc * dx;

    std::vector<std::complex<double>> c = forward(u.row(l));
    double dsum = 0.0;
    for (std::size_t m = 0; m < u.n; ++m) {
      const double xi = slot_xi(m, u.n, u.X);
      dsum += xi * xi * std::norm(c[m]);
    }
    dirich[l] = dsum * dxi;
  });

  double e_s = 0.0;
  for (std::size_t l = 0; l + 1 < levels; ++l)
    e_s += 0.5 * (w[l] + w[l + 1]) * (s[l + 1] - s[l]);

  // continuous part of A(ds): trapezoid of the Dirichlet energy against the
  // density mass of each cell (exact per-cell masses, atoms excluded here)
  double e_x = 0.0;
  for (std::size_t l = 0; l + 1 < levels; ++l) {
    double cell = cumulative_mass(str, std::min(s[l + 1], str.R)) -
                  cumulative_mass(str, std::min(s[l], str.R));
    for (const Atom& atom : str.atoms)
      if (atom.s >= s[l] && atom.s < s[l + 1]) cell -= atom.mass;
    e_x += 0.5 * (dirich[l] + dirich[l + 1]) * cell;
  }

  // atoms contribute mass * Dirichlet energy exactly at their position
  // (linear interpolation between levels, clamped at the last level)
  for (const Atom& atom : str.atoms) {
    double d;
    if (atom.s >= s.back()) {
      d = dirich.back();
    } else {
      const std::size_t hi =
          std::upper_bound(s.begin(), s.end(), atom.s) - s.begin();
      const std::size_t lo = hi == 0 ? 0 : hi - 1;
      const double span = s[hi] - s[lo];
      const double frac = span > 0.0 ? (atom.s - s[lo]) / span : 0.0;
      d = dirich[lo] + frac * (dirich[hi] - dirich[lo]);
    }
    e_x += atom.mass * d;
  }
  return e_s + e_x;
}

std::string to_csv(const HalfSpaceField& u) {
  std::ostringstream out;
  out << "x";
  for (double s : u.s_levels) out << ',' << format_g17(s);
  out << '\n';
  const GridFunction base = make_grid(u.n, u.X);
  for (std::size_t j = 0; j < u.n; ++j) {
    out << format_g17(base.x(j));
    for (std::size_t l = 0; l < u.s_levels.size(); ++l)
      out << ',' << format_g17(u.values[l][j]);
    out << '\n';
  }
  return out.str();
}

}  // namespace krein
