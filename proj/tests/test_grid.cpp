#include "krein/grid.hpp"

#include <cmath>
#include <complex>
#include <random>
#include <stdexcept>

#include "doctest.h"

using namespace krein;

namespace {
constexpr double kPi = 3.14159265358979323846;
}

TEST_CASE("fft matches the direct transform") {
  std::mt19937_64 eng(7);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  const std::size_t n = 16;
  std::vector<std::complex<double>> a(n);
  for (auto& z : a) z = {unif(eng), unif(eng)};

  std::vector<std::complex<double>> got = a;
  fft(got, -1);
  for (std::size_t k = 0; k < n; ++k) {
    std::complex<double> want(0.0, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      const double ang = -2.0 * kPi * static_cast<double>(j * k) / n;
      want += a[j] * std::complex<double>(std::cos(ang), std::sin(ang));
    }
    CHECK(std::abs(got[k] - want) <= 1e-12 * n);
  }

  // inverse transform (conjugate kernel, no scaling) undoes it up to n
  fft(got, 1);
  for (std::size_t j = 0; j < n; ++j)
    CHECK(std::abs(got[j] / static_cast<double>(n) - a[j]) <= 1e-13);

  CHECK_THROWS_AS(fft(got, 2), std::invalid_argument);
  std::vector<std::complex<double>> bad(12);
  CHECK_THROWS_AS(fft(bad, -1), std::invalid_argument);
}

TEST_CASE("grid validation") {
  CHECK_THROWS_AS(make_grid(12, 1.0), std::invalid_argument);  // not a power of two
  CHECK_THROWS_AS(make_grid(4, 1.0), std::invalid_argument);   // too small
  CHECK_THROWS_AS(make_grid(16, -2.0), std::invalid_argument);
  GridFunction g = make_grid(16, 2.0);
  CHECK(g.dx() == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(g.x(0) == -2.0);
  CHECK(g.x(8) == 0.0);
  g.values[3] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(g.validate(), std::invalid_argument);
}

TEST_CASE("slot frequencies cover [-n/2, n/2)") {
  const std::size_t n = 8;
  const double X = 2.0;
  const std::vector<double> want = {0, 1, 2, 3, -4, -3, -2, -1};
  for (std::size_t m = 0; m < n; ++m)
    CHECK(slot_xi(m, n, X) == doctest::Approx(kPi * want[m] / X).epsilon(1e-15));
}

TEST_CASE("forward concentrates a pure mode on two slots") {
  const std::size_t n = 32;
  const double X = 4.0;
  const double xi1 = kPi * 3.0 / X;
  GridFunction f = grid_from(n, X, [&](double x) { return std::cos(xi1 * x); });
  auto c = forward(f);
  // cos splits evenly between slots k = 3 and k = n - 3
  const double expect = 0.5 * f.dx() * n / std::sqrt(2.0 * kPi);
  for (std::size_t m = 0; m < n; ++m) {
    if (m == 3 || m == n - 3) {
      CHECK(std::abs(c[m] - std::complex<double>(expect, 0.0)) <= 1e-12 * expect);
    } else {
      CHECK(std::abs(c[m]) <= 1e-12 * expect);
    }
  }
}

TEST_CASE("round trip and Parseval") {
  std::mt19937_64 eng(11);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  const std::size_t n = 64;
  const double X = 5.0;
  GridFunction f = make_grid(n, X);
  for (auto& v : f.values) v = unif(eng);

  auto c = forward(f);
  GridFunction back = inverse(c, X);
  for (std::size_t j = 0; j < n; ++j)
    CHECK(back.values[j] == doctest::Approx(f.values[j]).epsilon(1e-13));

  // sum |c|^2 dxi equals sum f^2 dx exactly for the unitary normalization
  double spec = 0.0;
  for (const auto& z : c) spec += std::norm(z);
  spec *= kPi / X;
  double phys = 0.0;
  for (double v : f.values) phys += v * v;
  phys *= f.dx();
  CHECK(spec == doctest::Approx(phys).epsilon(1e-13));
  CHECK(f.l2_norm() == doctest::Approx(std::sqrt(phys)).epsilon(1e-14));
}

TEST_CASE("multiplier application") {
  const std::size_t n = 32;
  const double X = 4.0;
  const double xi1 = kPi * 5.0 / X;
  GridFunction f = grid_from(n, X, [&](double x) { return std::cos(xi1 * x); });

  GridFunction same = apply_multiplier(f, [](double) { return 1.0; });
  for (std::size_t j = 0; j < n; ++j)
    CHECK(same.values[j] == doctest::Approx(f.values[j]).epsilon(1e-13));

  // g(xi^2) = xi^2 acts as -d^2/dx^2 on a single mode
  GridFunction lap = apply_multiplier(f, [](double lam) { return lam; });
  for (std::size_t j = 0; j < n; ++j)
    CHECK(lap.values[j] ==
          doctest::Approx(xi1 * xi1 * f.values[j]).epsilon(1e-12));
}

TEST_CASE("grid csv export") {
  GridFunction g = make_grid(8, 1.0);
  for (std::size_t j = 0; j < 8; ++j) g.values[j] = static_cast<double>(j);
  const std::string csv = to_csv(g);
  CHECK(csv.substr(0, 8) == "x,value\n");
  CHECK(csv.find("-1,0\n") != std::string::npos);
  CHECK(csv.find("-0.75,1\n") != std::string::npos);
  // byte-determinism: a second export is identical
  CHECK(to_csv(g) == csv);
}
