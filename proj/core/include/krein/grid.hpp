#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

namespace krein {

// Real function sampled on the periodic grid x_j = -X + j * (2X/n) over
// [-X, X); the discrete frequency set is xi_k = pi k / X, k in [-n/2, n/2).
struct GridFunction {
  std::size_t n = 0;
  double X = 0.0;
  std::vector<double> values;

  double dx() const { return 2.0 * X / static_cast<double>(n); }
  double x(std::size_t j) const { return -X + static_cast<double>(j) * dx(); }
  void validate() const;  // n a power of two >= 8, finite values, |values| == n
  // sqrt(sum f^2 dx): the L2 norm the energy identities are stated in
  double l2_norm() const;
};

GridFunction make_grid(std::size_t n, double X);
GridFunction grid_from(std::size_t n, double X, const std::function<double(double)>& f);

// In-place radix-2 transform, values.size() a power of two; sign -1 applies
// e^{-i 2 pi jk/n} (forward), +1 its conjugate.  Unscaled.
void fft(std::vector<std::complex<double>>& a, int sign);

// Frequency xi of DFT slot m: k = m for m < n/2, k = m - n above (the n/2
// slot is the negative nyquist frequency).
double slot_xi(std::size_t m, std::size_t n, double X);

// Unitary-normalized spectrum c_k = (dx / sqrt(2 pi)) sum_j f_j e^{-i xi_k x_j}
// in DFT slot order; with the dual measure dxi = pi/X this makes the discrete
// Parseval identity sum |c_k|^2 dxi = sum f_j^2 dx exact.
std::vector<std::complex<double>> forward(const GridFunction& f);
GridFunction inverse(const std::vector<std::complex<double>>& c, double X);

// Real even multiplier g(xi^2) applied in frequency space.
GridFunction apply_multiplier(const GridFunction& f,
                              const std::function<double(double)>& g);

// CSV export: header "x,value", 17 significant digits.
std::string to_csv(const GridFunction& f);

}  // namespace krein
