#pragma once

namespace krein {

// Modified Bessel functions of real order nu in [0, 21], argument x >= 0.
// Accuracy is ~1e-14 relative across that range; out-of-range nu throws.
// The scaled variants stay representable for all x (no overflow/underflow):
//   bessel_i_scaled = e^{-x} I_nu(x),  bessel_k_scaled = e^{x} K_nu(x).
double bessel_i(double nu, double x);
double bessel_k(double nu, double x);
double bessel_i_scaled(double nu, double x);
double bessel_k_scaled(double nu, double x);

}  // namespace krein
