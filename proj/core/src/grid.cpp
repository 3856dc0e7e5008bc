#include "krein/grid.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <utility>

#include "krein/util.hpp"

namespace krein {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kSqrt2Pi = 2.50662827463100050242;

bool power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

}  // namespace

void GridFunction::validate() const {
  if (!power_of_two(n) || n < 8)
    throw std::invalid_argument("grid: n must be a power of two >= 8");
  if (!(X > 0.0) || !std::isfinite(X))
    throw std::invalid_argument("grid: half-length X must be positive");
  if (values.size() != n)
    throw std::invalid_argument("grid: values must hold exactly n samples");
  for (double v : values)
    if (!std::isfinite(v)) throw std::invalid_argument("grid: non-finite sample");
}

double GridFunction::l2_norm() const {
  double s = 0.0;
  for (double v : values) s += v * v;
  return std::sqrt(s * dx());
}

GridFunction make_grid(std::size_t n, double X) {
  GridFunction g{n, X, std::vector<double>(n, 0.0)};
  g.validate();
  return g;
}

GridFunction grid_from(std::size_t n, double X,
                       const std::function<double(double)>& f) {
  GridFunction g = make_grid(n, X);
  for (std::size_t j = 0; j < n; ++j) g.values[j] = f(g.x(j));
  g.validate();
  return g;
}

void fft(std::vector<std::complex<double>>& a, int sign) {
  const std::size_t n = a.size();
  if (!power_of_two(n)) throw std::invalid_argument("fft: length must be a power of two");
  if (sign != 1 && sign != -1) throw std::invalid_argument("fft: sign must be +-1");
  // bit-reversal permutation
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = sign * 2.0 * kPi / static_cast<double>(len);
    const std::complex<double> wl(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t j = 0; j < len / 2; ++j) {
        std::complex<double> u = a[i + j];
        std::complex<double> v = a[i + j + len / 2] * w;
        a[i + j] = u + v;
        a[i + j + len / 2] = u - v;
        w *= wl;
      }
    }
  }
}

double slot_xi(std::size_t m, std::size_t n, double X) {
  const auto k = static_cast<std::ptrdiff_t>(m) -
                 (m < n / 2 ? 0 : static_cast<std::ptrdiff_t>(n));
  return kPi * static_cast<double>(k) / X;
}

std::vector<std::complex<double>> forward(const GridFunction& f) {
  f.validate();
  std::vector<std::complex<double>> a(f.n);
  for (std::size_t j = 0; j < f.n; ++j) a[j] = f.values[j];
  fft(a, -1);
  // x_j = -X + j dx shifts each slot by e^{i xi_k X} = (-1)^k = (-1)^m (n even)
  const double scale = f.dx() / kSqrt2Pi;
  for (std::size_t m = 0; m < f.n; ++m) a[m] *= (m & 1) ? -scale : scale;
  return a;
}

GridFunction inverse(const std::vector<std::complex<double>>& c, double X) {
  const std::size_t n = c.size();
  GridFunction g = make_grid(n, X);
  std::vector<std::complex<double>> a(c);
  const double scale = kSqrt2Pi / (g.dx() * static_cast<double>(n));
  for (std::size_t m = 0; m < n; ++m) a[m] *= (m & 1) ? -scale : scale;
  fft(a, 1);
  for (std::size_t j = 0; j < n; ++j) g.values[j] = a[j].real();
  return g;
}

GridFunction apply_multiplier(const GridFunction& f,
                              const std::function<double(double)>& g) {
  std::vector<std::complex<double>> c = forward(f);
  for (std::size_t m = 0; m < f.n; ++m) {
    const double xi = slot_xi(m, f.n, f.X);
    c[m] *= g(xi * xi);
  }
  return inverse(c, f.X);
}

std::string to_csv(const GridFunction& f) {
  std::ostringstream out;
  out << "x,value\n";
  for (std::size_t j = 0; j < f.n; ++j)
    out << format_g17(f.x(j)) << ',' << format_g17(f.values[j]) << '\n';
  return out.str();
}

}  // namespace krein
