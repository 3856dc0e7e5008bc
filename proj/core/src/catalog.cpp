#include "krein/catalog.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "krein/ode.hpp"
#include "krein/special.hpp"

namespace krein {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

std::string fmt_param(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

std::string display_name(const std::string& base,
                         const std::vector<std::pair<std::string, double>>& params) {
  if (params.empty()) return base;
  std::string out = base + "(";
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (i) out += ",";
    out += params[i].first + "=" + fmt_param(params[i].second);
  }
  return out + ")";
}

double param_or(const std::vector<double>& params, std::size_t i, double dflt) {
  return i < params.size() ? params[i] : dflt;
}

DensitySegment constant_piece(double lo, double hi, double c) {
  DensitySegment seg;
  seg.lo = lo;
  seg.hi = hi;
  seg.family = Family::constant;
  seg.c = c;
  return seg;
}

DensitySegment rational_piece(double lo, double hi, double c, double q, double r) {
  DensitySegment seg;
  seg.lo = lo;
  seg.hi = hi;
  seg.family = Family::rational_power;
  seg.c = c;
  seg.q = q;
  seg.r = r;
  return seg;
}

CatalogEntry make_classical() {
  CatalogEntry e;
  e.base = "classical";
  e.name = "classical";
  e.string.segments = {constant_piece(0.0, kInf, 1.0)};
  e.string.validate();
  CoefficientA a;
  a.segments = {constant_piece(0.0, kInf, 1.0)};
  e.coeff = a;
  e.psi = [](double lam) { return std::sqrt(lam); };
  e.phi = [](double lam, double s) { return std::exp(-std::sqrt(lam) * s); };
  e.phi_var = PhiVariable::both;
  e.positive_lipschitz = true;
  return e;
}

CatalogEntry make_caffarelli_silvestre(double alpha) {
  if (!(alpha > 0.0 && alpha < 2.0))
    throw std::invalid_argument("catalog: caffarelli_silvestre needs alpha in (0,2)");
  // c_a = 2^a Gamma(a/2) / |Gamma(-a/2)|, C_a = 2^(1-a/2) / Gamma(a/2)
  double ca = std::pow(2.0, alpha) * std::tgamma(0.5 * alpha) /
              std::fabs(std::tgamma(-0.5 * alpha));
  double Ca = std::pow(2.0, 1.0 - 0.5 * alpha) / std::tgamma(0.5 * alpha);

  CatalogEntry e;
  e.base = "caffarelli_silvestre";
  e.params = {{"alpha", alpha}};
  e.name = display_name(e.base, e.params);

  // A(s) = a^-2 c_a^(2/a) s^(2/a - 2)
  DensitySegment seg;
  seg.lo = 0.0;
  seg.hi = kInf;
  seg.family = Family::power;
  seg.c = std::pow(ca, 2.0 / alpha) / (alpha * alpha);
  seg.p = 2.0 / alpha - 2.0;
  e.string.segments = {seg};
  e.string.validate();

  // a(t) = a^-1 c_a t^(1 - a)
  DensitySegment ct;
  ct.lo = 0.0;
  ct.hi = kInf;
  ct.family = Family::power;
  ct.c = ca / alpha;
  ct.p = 1.0 - alpha;
  CoefficientA a;
  a.segments = {ct};
  e.coeff = a;

  e.psi = [alpha](double lam) { return std::pow(lam, 0.5 * alpha); };
  // phi(s) = C_a (c_a lam^(a/2) s)^(1/2) K_{a/2}((c_a lam^(a/2) s)^(1/a))
  e.phi = [alpha, ca, Ca](double lam, double s) {
    if (s <= 0.0) return 1.0;
    double y = ca * std::pow(lam, 0.5 * alpha) * s;
    return Ca * std::sqrt(y) * bessel_k(0.5 * alpha, std::pow(y, 1.0 / alpha));
  };
  e.phi_var = PhiVariable::s_side;
  e.positive_lipschitz = true;
  return e;
}

CatalogEntry make_quasi_relativistic(double m) {
  if (!(m > 0.0)) throw std::invalid_argument("catalog: quasi_relativistic needs m > 0");
  CatalogEntry e;
  e.base = "quasi_relativistic";
  e.params = {{"m", m}};
  e.name = display_name(e.base, e.params);
  e.string.segments = {rational_piece(0.0, kInf, 1.0, 2.0 * m, -2.0)};
  e.string.validate();
  DensitySegment ct;
  ct.lo = 0.0;
  ct.hi = kInf;
  ct.family = Family::exponential;
  ct.c = 1.0;
  ct.q = -2.0 * m;
  CoefficientA a;
  a.segments = {ct};
  e.coeff = a;
  e.psi = [m](double lam) { return std::sqrt(m * m + lam) - m; };
  e.phi = [m](double lam, double s) {
    double expo = (m - std::sqrt(m * m + lam)) / (2.0 * m);
    return std::pow(1.0 + 2.0 * m * s, expo);
  };
  e.phi_var = PhiVariable::s_side;
  e.positive_lipschitz = true;
  return e;
}

CatalogEntry make_finite_dual(double m) {
  if (!(m > 0.0)) throw std::invalid_argument("catalog: finite_dual needs m > 0");
  CatalogEntry e;
  e.base = "finite_dual";
  e.params = {{"m", m}};
  e.name = display_name(e.base, e.params);
  double R = 1.0 / (2.0 * m);
  e.string.segments = {rational_piece(0.0, R, 1.0, -2.0 * m, -2.0)};
  e.string.R = R;
  e.string.end = EndCondition::dirichlet_at_R;  // automatic: (R-s)A(s) diverges
  e.string.validate();
  DensitySegment ct;
  ct.lo = 0.0;
  ct.hi = kInf;
  ct.family = Family::exponential;
  ct.c = 1.0;
  ct.q = 2.0 * m;
  CoefficientA a;
  a.segments = {ct};
  e.coeff = a;
  e.psi = [m](double lam) { return std::sqrt(m * m + lam) + m; };
  e.phi = [m](double lam, double s) {
    double z = 1.0 - 2.0 * m * s;
    if (z <= 0.0) return 0.0;
    double expo = (m + std::sqrt(m * m + lam)) / (2.0 * m);
    return std::pow(z, expo);
  };
  e.phi_var = PhiVariable::s_side;
  e.positive_lipschitz = true;
  return e;
}

CatalogEntry make_water_waves(double R, bool neumann) {
  if (!(R > 0.0) || !std::isfinite(R))
    throw std::invalid_argument("catalog: water waves need finite R > 0");
  CatalogEntry e;
  e.base = neumann ? "water_waves_neumann" : "water_waves_dirichlet";
  e.params = {{"R", R}};
  e.name = display_name(e.base, e.params);
  e.string.segments = {constant_piece(0.0, R, 1.0)};
  e.string.R = R;
  e.string.end = neumann ? EndCondition::neumann_at_R : EndCondition::dirichlet_at_R;
  e.string.validate();
  DensitySegment ct = constant_piece(0.0, R, 1.0);
  CoefficientA a;
  a.segments = {ct};
  a.r = R;
  e.coeff = a;
  if (neumann) {
    e.psi = [R](double lam) {
      double rt = std::sqrt(lam);
      return rt * std::tanh(rt * R);
    };
    e.phi = [R](double lam, double t) {
      double rt = std::sqrt(lam);
      if (t >= R) t = R;  // flat on the zero-density extension
      // cosh(rt (R-t)) / cosh(rt R), written to avoid large-argument overflow
      double u = rt * (R - t);
      double v = rt * R;
      return std::exp(u - v) * (1.0 + std::exp(-2.0 * u)) / (1.0 + std::exp(-2.0 * v));
    };
  } else {
    e.psi = [R](double lam) {
      if (lam == 0.0) return 1.0 / R;
      double rt = std::sqrt(lam);
      return rt / std::tanh(rt * R);
    };
    e.phi = [R](double lam, double t) {
      if (t >= R) return 0.0;
      double rt = std::sqrt(lam);
      double u = rt * (R - t);
      double v = rt * R;
      return std::exp(u - v) * (1.0 - std::exp(-2.0 * u)) / (1.0 - std::exp(-2.0 * v));
    };
  }
  e.phi_var = PhiVariable::both;
  // the neumann string continues with zero density, so A is not positive there
  e.positive_lipschitz = !neumann;
  return e;
}

CatalogEntry make_bessel(double alpha) {
  if (!(alpha > 0.0 && alpha <= 20.0))
    throw std::invalid_argument("catalog: bessel needs alpha in (0, 20]");
  CatalogEntry e;
  e.base = "bessel";
  e.params = {{"alpha", alpha}};
  e.name = display_name(e.base, e.params);
  double R = 1.0 / (2.0 * alpha);
  // A(s) = (1 - 2 alpha s)^(1/alpha - 2); dirichlet at R is part of the
  // definition (for alpha < 1 the end is integrable and the condition does not
  // come for free)
  double r = 1.0 / alpha - 2.0;
  if (r == 0.0)
    e.string.segments = {constant_piece(0.0, R, 1.0)};
  else
    e.string.segments = {rational_piece(0.0, R, 1.0, -2.0 * alpha, r)};
  e.string.R = R;
  e.string.end = EndCondition::dirichlet_at_R;
  e.string.validate();
  // a(t) = (1 - t)^(1 - 2 alpha) on (0, 1)
  DensitySegment ct = rational_piece(0.0, 1.0, 1.0, -1.0, 1.0 - 2.0 * alpha);
  CoefficientA a;
  a.segments = {ct};
  a.r = 1.0;
  e.coeff = a;
  e.psi = [alpha](double lam) {
    if (lam == 0.0) return 2.0 * alpha;
    double x = std::sqrt(lam);
    return x * bessel_i_signed(alpha - 1.0, x) / bessel_i(alpha, x);
  };
  // phi(t) = (1-t)^alpha I_alpha(sqrt(lam)(1-t)) / I_alpha(sqrt(lam))
  e.phi = [alpha](double lam, double t) {
    if (t >= 1.0) return 0.0;
    double x = std::sqrt(lam);
    double ratio = bessel_i_scaled(alpha, x * (1.0 - t)) / bessel_i_scaled(alpha, x) *
                   std::exp(-x * t);
    return std::pow(1.0 - t, alpha) * ratio;
  };
  e.phi_var = PhiVariable::t_side;
  e.positive_lipschitz = true;
  return e;
}

}  // namespace

double bessel_i_signed(double nu, double x) {
  if (nu >= 0.0) return bessel_i(nu, x);
  double m = -nu;
  // I_{-nu} = I_nu + (2/pi) sin(pi nu) K_nu; the K term drops for integers
  return bessel_i(m, x) + (2.0 / kPi) * std::sin(kPi * m) * bessel_k(m, x);
}

CatalogEntry shifted_entry(const CatalogEntry& base_entry, double mu) {
  if (!(mu > 0.0)) throw std::invalid_argument("catalog: shifted needs mu > 0");
  if (!base_entry.coeff || !base_entry.phi || base_entry.phi_var == PhiVariable::s_side)
    throw std::invalid_argument("catalog: shifted base needs a(t) and a t-side phi");
  CatalogEntry e;
  e.base = "shifted";
  e.params = base_entry.params;
  e.params.emplace_back("mu", mu);
  e.name = "shifted(" + base_entry.base + ",mu=" + fmt_param(mu) + ")";
  CoefficientA b = shift_string(*base_entry.coeff, mu);
  e.string = from_coefficient_a(b);
  e.coeff = std::move(b);
  auto base_psi = base_entry.psi;
  e.psi = [base_psi, mu](double lam) { return base_psi(mu + lam) - base_psi(mu); };
  auto base_phi = base_entry.phi;
  e.phi = [base_phi, mu](double lam, double t) {
    return base_phi(mu + lam, t) / base_phi(mu, t);
  };
  e.phi_var = PhiVariable::t_side;
  e.positive_lipschitz = base_entry.positive_lipschitz;
  return e;
}

CatalogEntry lookup(const std::string& name, const std::vector<double>& params) {
  if (name == "classical") return make_classical();
  if (name == "caffarelli_silvestre")
    return make_caffarelli_silvestre(param_or(params, 0, 1.0));
  if (name == "quasi_relativistic") return make_quasi_relativistic(param_or(params, 0, 1.0));
  if (name == "finite_dual") return make_finite_dual(param_or(params, 0, 1.0));
  if (name == "shifted") return shifted_entry(make_classical(), param_or(params, 0, 1.0));
  if (name == "water_waves_neumann") return make_water_waves(param_or(params, 0, 1.0), true);
  if (name == "water_waves_dirichlet")
    return make_water_waves(param_or(params, 0, 1.0), false);
  if (name == "bessel") return make_bessel(param_or(params, 0, 1.0));
  throw std::invalid_argument("catalog: unknown entry '" + name + "'");
}

std::vector<CatalogEntry> default_entries() {
  std::vector<CatalogEntry> out;
  out.push_back(make_classical());
  out.push_back(make_caffarelli_silvestre(0.5));
  out.push_back(make_caffarelli_silvestre(1.0));
  out.push_back(make_caffarelli_silvestre(1.5));
  out.push_back(make_quasi_relativistic(1.0));
  out.push_back(make_finite_dual(1.0));
  out.push_back(shifted_entry(make_classical(), 1.0));
  out.push_back(make_water_waves(1.0, true));
  out.push_back(make_water_waves(1.0, false));
  out.push_back(make_bessel(0.5));
  out.push_back(make_bessel(1.0));
  return out;
}

std::vector<std::string> catalog_names() {
  return {"classical",          "caffarelli_silvestre", "quasi_relativistic",
          "finite_dual",        "shifted",              "water_waves_neumann",
          "water_waves_dirichlet", "bessel"};
}

}  // namespace krein
