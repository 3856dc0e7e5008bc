#include "krein/extension.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "doctest.h"
#include "krein/catalog.hpp"
#include "krein/util.hpp"

using namespace krein;

namespace {

constexpr double kPi = 3.14159265358979323846;

GridFunction random_band_limited(std::size_t n, double X, std::size_t kmax,
                                 std::uint64_t seed) {
  std::mt19937_64 eng(seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  GridFunction f = make_grid(n, X);
  for (std::size_t k = 1; k <= kmax; ++k) {
    const double a = unif(eng), b = unif(eng);
    const double xi = kPi * static_cast<double>(k) / X;
    for (std::size_t j = 0; j < n; ++j) {
      const double x = f.x(j);
      f.values[j] += a * std::cos(xi * x) + b * std::sin(xi * x);
    }
  }
  return f;
}

double dot_l2(const GridFunction& a, const GridFunction& b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.n; ++j) s += a.values[j] * b.values[j];
  return s * a.dx();
}

// C^2 bump ((s-lo)(hi-s))^3 on (lo, hi) and its second derivative
double bump3(double s, double lo, double hi) {
  if (s <= lo || s >= hi) return 0.0;
  const double p = (s - lo) * (hi - s);
  return p * p * p;
}

double bump3_dd(double s, double lo, double hi) {
  if (s <= lo || s >= hi) return 0.0;
  const double p = (s - lo) * (hi - s);
  const double dp = (hi + lo) - 2.0 * s;
  return 6.0 * p * dp * dp - 6.0 * p * p;
}

KreinString exp_string(double c, double q) {
  KreinString str;
  DensitySegment seg;
  seg.family = Family::exponential;
  seg.c = c;
  seg.q = q;
  str.segments = {seg};
  return str;
}

}  // namespace

TEST_CASE("psi source variants") {
  PsiSource lap = PsiSource::laplacian();
  CHECK(lap.psi(3.5) == 3.5);
  CHECK(lap.psi(0.0) == 0.0);
  CHECK(!lap.has_phi());
  CHECK(lap.string() == nullptr);
  CHECK_THROWS_AS(lap.psi(-1.0), std::invalid_argument);

  PsiSource cl = PsiSource::from_string(lookup("classical").string);
  CHECK(cl.psi(4.0) == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(cl.psi(0.0) == 0.0);
  CHECK(cl.phi(1.0, 0.7) == doctest::Approx(std::exp(-0.7)).epsilon(1e-6));
  CHECK(cl.phi(0.0, 5.0) == 1.0);
  CHECK(cl.profile_end() == kInf);
  CHECK(cl.string() != nullptr);

  // closed-form psi from the entry, profiles from its string; the dirichlet
  // end bounds the profile domain and fixes phi_0 = 1 - s/R
  PsiSource wd = PsiSource::from_entry(lookup("water_waves_dirichlet", {1.0}));
  CHECK(wd.profile_end() == 1.0);
  CHECK(wd.phi(0.0, 0.25) == doctest::Approx(0.75).epsilon(1e-14));
  CHECK(wd.psi(2.0) == doctest::Approx(1.5918916555204874).epsilon(1e-13));
  CHECK(wd.psi(0.0) == doctest::Approx(1.0).epsilon(1e-13));

  PsiSource cf = PsiSource::closed_form(
      "sqrt", [](double lam) { return std::sqrt(lam); }, 0.0,
      [](double lam, double s) { return std::exp(-std::sqrt(lam) * s); });
  CHECK(cf.psi(9.0) == 3.0);
  CHECK(cf.has_phi());
  CHECK(cf.phi(4.0, 0.5) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));

  PsiSource bare = PsiSource::closed_form(
      "atom", [](double lam) { return lam / (1.0 + lam); }, 0.0);
  CHECK(!bare.has_phi());
  GridFunction f = make_grid(8, 1.0);
  CHECK_THROWS_AS(harmonic_extension(bare, f, {0.0, 0.5, 1.0}), std::logic_error);
}

TEST_CASE("harmonic extension of a single mode") {
  const std::size_t n = 64;
  const double X = 8.0;
  const double xi1 = kPi * 4.0 / X;
  GridFunction f = grid_from(n, X, [&](double x) { return std::cos(xi1 * x); });
  const std::vector<double> levels = default_s_levels(3.0, 40);

  PsiSource cl = PsiSource::from_string(lookup("classical").string);
  HalfSpaceField u = harmonic_extension(cl, f, levels);
  CHECK(u.s_levels == levels);
  CHECK(u.values.size() == levels.size());

  // row 0 reproduces the boundary data (round trip only)
  for (std::size_t j = 0; j < n; ++j)
    CHECK(u.values[0][j] == doctest::Approx(f.values[j]).epsilon(1e-12));

  // u(s, x) = e^{-xi s} cos(xi x), profile interpolation accuracy
  for (std::size_t l = 0; l < levels.size(); ++l) {
    const double decay = std::exp(-xi1 * levels[l]);
    for (std::size_t j = 0; j < n; ++j)
      CHECK(u.values[l][j] == doctest::Approx(decay * f.values[j])
                                  .epsilon(1e-6));
  }

  // the closed-form source realizes the same field to transform accuracy
  PsiSource cf = PsiSource::closed_form(
      "sqrt", [](double lam) { return std::sqrt(lam); }, 0.0,
      [](double lam, double s) { return std::exp(-std::sqrt(lam) * s); });
  HalfSpaceField v = harmonic_extension(cf, f, levels);
  for (std::size_t l = 0; l < levels.size(); ++l) {
    const double decay = std::exp(-xi1 * levels[l]);
    for (std::size_t j = 0; j < n; ++j)
      CHECK(v.values[l][j] == doctest::Approx(decay * f.values[j])
                                  .epsilon(1e-12));
  }
}

TEST_CASE("extension of a spike reproduces the periodized Poisson kernel") {
  // A = 1: the extension semigroup is the Poisson kernel; on the torus of
  // circumference 2X the kernel sums to sinh(a) / (2X (cosh a - cos(pi x/X)))
  // with a = pi s / X -- an independent closed form
  const std::size_t n = 256;
  const double X = 20.0;
  GridFunction f = make_grid(n, X);
  f.values[n / 2] = 1.0 / f.dx();  // unit-mass spike at x = 0

  PsiSource cl = PsiSource::from_string(lookup("classical").string);
  HalfSpaceField u = harmonic_extension(cl, f, {0.0, 0.5, 1.0});

  auto kernel = [&](double s, double x) {
    const double a = kPi * s / X;
    return std::sinh(a) / (2.0 * X * (std::cosh(a) - std::cos(kPi * x / X)));
  };
  for (std::size_t j = 0; j < n; ++j) {
    const double x = f.x(j);
    // s = 1: frequency truncation is ~1e-9; s = 0.5: ~3e-5 (slower decay)
    CHECK(u.values[2][j] == doctest::Approx(kernel(1.0, x)).epsilon(1e-6));
    CHECK(u.values[1][j] == doctest::Approx(kernel(0.5, x)).epsilon(2e-4));
  }
}

TEST_CASE("dtn_apply: multiplier action and the boundary derivative") {
  const std::size_t n = 64;
  const double X = 8.0;
  const double xi1 = kPi * 5.0 / X;

  PsiSource cf = PsiSource::closed_form(
      "sqrt", [](double lam) { return std::sqrt(lam); }, 0.0);
  GridFunction f = grid_from(n, X, [&](double x) { return std::cos(xi1 * x); });
  GridFunction g = dtn_apply(cf, f);
  for (std::size_t j = 0; j < n; ++j)
    CHECK(g.values[j] == doctest::Approx(xi1 * f.values[j]).epsilon(1e-12));

  // constants are annihilated: psi(0) = 0 for an infinite string
  PsiSource cl = PsiSource::from_string(lookup("classical").string);
  GridFunction cst = grid_from(n, X, [](double) { return 2.5; });
  GridFunction gc = dtn_apply(cl, cst);
  for (std::size_t j = 0; j < n; ++j) CHECK(std::abs(gc.values[j]) <= 1e-13);

  // Richardson-extrapolated boundary s-derivative of the extension equals
  // -psi(-Delta) f
  GridFunction fr = random_band_limited(n, X, 6, 3);
  GridFunction dtn = dtn_apply(cl, fr);
  const double h = 1e-3;
  HalfSpaceField u = harmonic_extension(cl, fr, {0.0, 0.5 * h, h});
  double num = 0.0, den = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double d1 = (u.values[1][j] - u.values[0][j]) / (0.5 * h);
    const double d2 = (u.values[2][j] - u.values[0][j]) / h;
    const double rich = 2.0 * d1 - d2;
    num += (rich + dtn.values[j]) * (rich + dtn.values[j]);
    den += dtn.values[j] * dtn.values[j];
  }
  CHECK(std::sqrt(num / den) <= 0.01);
}

TEST_CASE("form_boundary identities") {
  const std::size_t n = 64;
  const double X = 8.0;
  const double xi1 = kPi * 3.0 / X;
  PsiSource cl = PsiSource::from_string(lookup("classical").string);

  // single mode of unit l2 norm pays exactly psi(xi^2)
  GridFunction f1 = grid_from(
      n, X, [&](double x) { return std::cos(xi1 * x) / std::sqrt(X); });
  CHECK(form_boundary(cl, f1) == doctest::Approx(xi1).epsilon(1e-10));

  // identity multiplier: the discrete Dirichlet energy, via <dtn f, f>
  PsiSource lap = PsiSource::laplacian();
  GridFunction fr = random_band_limited(n, X, 20, 9);
  CHECK(form_boundary(lap, fr) ==
        doctest::Approx(dot_l2(dtn_apply(lap, fr), fr)).epsilon(1e-12));

  // string multiplier: same algebraic identity
  CHECK(form_boundary(cl, fr) ==
        doctest::Approx(dot_l2(dtn_apply(cl, fr), fr)).epsilon(1e-10));
}

TEST_CASE("energy equality, minimality, and the norm bound") {
  const std::size_t n = 256;
  const double X = 20.0;
  PsiSource cl = PsiSource::from_string(lookup("classical").string);
  GridFunction f = random_band_limited(n, X, 25, 42);
  const std::vector<double> levels = default_s_levels(30.0, 200);

  HalfSpaceField u = harmonic_extension(cl, f, levels);
  const double eb = form_boundary(cl, f);
  const double eh = form_halfspace(*cl.string(), u);
  CHECK(eh / eb == doctest::Approx(1.0).epsilon(5e-3));

  // ||u(s, .)||_2 never exceeds ||f||_2
  const double fnorm = f.l2_norm();
  for (std::size_t l = 0; l < levels.size(); ++l)
    CHECK(u.row(l).l2_norm() <= fnorm * (1.0 + 1e-12));

  // zero-trace perturbations: the harmonic extension minimizes the half-space
  // energy and is orthogonal to the perturbation space
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    GridFunction w = random_band_limited(n, X, 20, 1000 + seed);
    HalfSpaceField v = u, sum = u;
    for (std::size_t l = 0; l < levels.size(); ++l) {
      const double gs = bump3(levels[l], 0.3, 3.0);
      for (std::size_t j = 0; j < n; ++j) {
        v.values[l][j] = gs * w.values[j];
        sum.values[l][j] = u.values[l][j] + v.values[l][j];
      }
    }
    const double ev = form_halfspace(*cl.string(), v);
    const double eplus = form_halfspace(*cl.string(), sum);
    CHECK(eplus >= eh * (1.0 - 1e-12));
    const double cross = 0.5 * (eplus - eh - ev);
    CHECK(std::abs(cross) <= 1e-3 * std::sqrt(eh * ev));
  }

  // a constant field carries no energy
  HalfSpaceField cst;
  cst.s_levels = {0.0, 0.5, 1.0, 1.5, 2.0};
  cst.n = 8;
  cst.X = 1.0;
  cst.values.assign(5, std::vector<double>(8, 3.0));
  CHECK(form_halfspace(*cl.string(), cst) <= 1e-20);
}

TEST_CASE("extension satisfies the weak harmonic equation") {
  // int int u (g'' h + A g h'') dx ds = 0 for products of smooth bumps g(s)
  // and single modes h(x); quadrature on a dense uniform ladder
  const std::size_t n = 64;
  const double X = 8.0;
  GridFunction f = random_band_limited(n, X, 10, 5);

  std::vector<double> levels(2001);
  for (std::size_t l = 0; l < levels.size(); ++l)
    levels[l] = 0.002 * static_cast<double>(l);

  const std::pair<double, double> windows[2] = {{0.3, 2.2}, {0.9, 3.7}};

  for (int variant = 0; variant < 2; ++variant) {
    KreinString str = variant == 0 ? lookup("classical").string
                                   : exp_string(1.0, -2.0);
    PsiSource src = PsiSource::from_string(str);
    HalfSpaceField u = harmonic_extension(src, f, levels);

    for (const auto& win : windows) {
      for (std::size_t k = 1; k <= 5; ++k) {
        const double xi = kPi * static_cast<double>(k) / X;
        GridFunction h = grid_from(n, X, [&](double x) { return std::cos(xi * x); });
        // U(s) = <u(s, .), h>
        std::vector<double> U(levels.size());
        for (std::size_t l = 0; l < levels.size(); ++l)
          U[l] = dot_l2(u.row(l), h);
        auto gdd = [&](std::size_t i) {
          return U[i] * bump3_dd(levels[i], win.first, win.second);
        };
        auto ag = [&](std::size_t i) {
          return U[i] * str.density(levels[i]) *
                 bump3(levels[i], win.first, win.second);
        };
        // composite Simpson: int U g'' cancels almost completely against the
        // flat part of U, so trapezoid error would swamp the tiny result
        auto simpson = [&](const std::function<double(std::size_t)>& fn) {
          double acc = 0.0;
          for (std::size_t l = 0; l + 2 < levels.size(); l += 2)
            acc += (fn(l) + 4.0 * fn(l + 1) + fn(l + 2)) *
                   (levels[l + 2] - levels[l]) / 6.0;
          return acc;
        };
        const double t1 = simpson(gdd);
        const double t2 = -xi * xi * simpson(ag);
        const double scale = std::max(std::abs(t1), std::abs(t2));
        CHECK(std::abs(t1 + t2) <= 1e-3 * scale);
      }
    }
  }
}

TEST_CASE("form_halfspace accounts for atoms exactly") {
  // single atom of mass 1 at s = 1: psi(lambda) = lambda / (1 + lambda);
  // phi is piecewise linear, so the kink limits the s-difference accuracy
  KreinString str;
  DensitySegment seg;
  seg.c = 0.0;
  str.segments = {seg};
  str.atoms = {{1.0, 1.0}};

  const std::size_t n = 64;
  const double X = 8.0;
  const double xi1 = kPi * 3.0 / X;
  GridFunction f = grid_from(n, X, [&](double x) { return std::cos(xi1 * x); });

  PsiSource src = PsiSource::from_string(str);
  const double lam = xi1 * xi1;
  CHECK(src.psi(lam) == doctest::Approx(lam / (1.0 + lam)).epsilon(1e-8));

  const std::vector<double> levels = default_s_levels(3.0, 300);
  HalfSpaceField u = harmonic_extension(src, f, levels);
  const double eb = form_boundary(src, f);
  const double eh = form_halfspace(str, u);
  CHECK(eh / eb == doctest::Approx(1.0).epsilon(2.5e-2));
}

TEST_CASE("half-space field csv and validation") {
  PsiSource cl = PsiSource::from_string(lookup("classical").string);
  GridFunction f = grid_from(8, 1.0, [](double x) { return x; });
  HalfSpaceField u = harmonic_extension(cl, f, {0.0, 0.5, 1.0});

  const std::string csv = to_csv(u);
  CHECK(csv.substr(0, 10) == "x,0,0.5,1\n");
  CHECK(csv.find("\n-1,") != std::string::npos);
  CHECK(to_csv(u) == csv);

  CHECK_THROWS_AS(harmonic_extension(cl, f, {0.1, 0.5}), std::invalid_argument);
  CHECK_THROWS_AS(harmonic_extension(cl, f, {0.0, 0.5, 0.5}), std::invalid_argument);
  CHECK_THROWS_AS(form_halfspace(*cl.string(), HalfSpaceField{}), std::invalid_argument);

  HalfSpaceField two;
  two.s_levels = {0.0, 1.0};
  two.n = 8;
  two.X = 1.0;
  two.values.assign(2, std::vector<double>(8, 0.0));
  CHECK_THROWS_AS(form_halfspace(*cl.string(), two), std::domain_error);

  // levels must stay below a dirichlet end
  PsiSource wd = PsiSource::from_entry(lookup("water_waves_dirichlet", {1.0}));
  CHECK_THROWS_AS(harmonic_extension(wd, f, {0.0, 0.6, 1.2}), std::invalid_argument);
}
