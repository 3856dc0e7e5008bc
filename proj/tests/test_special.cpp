#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "krein/special.hpp"

using namespace krein;

namespace {

struct BesselRef {
  double nu, x, iv, kv, iv_scaled, kv_scaled;
};

// high-precision reference values, 17 significant digits
const BesselRef kRefs[] = {
    {0.0, 0.5, 1.0634833707413235, 0.92441907122766586, 0.64503527044915007, 1.5241093857739095},
    {0.0, 5.0, 27.239871823604447, 0.0036910983340425943, 0.18354081260932835, 0.54780756431351899},
    {0.0, 100.0, 1.0737517071310738e+42, 4.656628229175902e-45, 0.039944379299096683,
     0.12517562165912658},
    {1.0, 0.5, 0.25789430539089632, 1.6564411200033009, 0.1564208031848717, 2.7310097082117857},
    {1.0, 30.0, 768532038938.957, 2.1677320018915494e-14, 0.071916330598647555,
     0.2316541293777118},
    {0.5, 1.0, 0.93767488824548765, 0.46106850444789456, 0.34495131388824463, 1.2533141373155003},
    {1.0 / 3.0, 2.0, 2.158782581372863, 0.11654496129616525, 0.2921594520963623,
     0.86115725706506641},
    {2.7, 0.05, 1.1332023107178833e-5, 16338.512785968012, 1.0779353818670514e-5,
     17176.206249658279},
    {7.5, 12.0, 1782.2829436017668, 1.9821049684594502e-5, 0.01095072487920414,
     3.2259708071218916},
    {17.3, 200.0, 9.6383344617330035e+84, 2.5841671515988749e-88, 0.013338457585119306,
     0.18673124049905706},
    {20.0, 500.0, 1.6784410801938621e+215, 5.9531517939106537e-219, 0.011958181720054548,
     0.083557975296296522},
    {0.0, 1e-6, 1.00000000000025, 13.931442073626419, 0.99999900000075, 13.931456005075459},
    {0.25, 1e-4, 0.092772961043446007, 21.351915864398119, 0.092763684211191006,
     21.354051162747697},
    {2.0, 0.001, 1.25000010416667e-7, 1999999.5000009716, 1.2487507288542741e-7,
     2002000.4998341392},
};

}  // namespace

TEST_CASE("modified bessel functions against reference values") {
  for (const auto& r : kRefs) {
    CAPTURE(r.nu);
    CAPTURE(r.x);
    CHECK(bessel_i_scaled(r.nu, r.x) == doctest::Approx(r.iv_scaled).epsilon(2e-14));
    CHECK(bessel_k_scaled(r.nu, r.x) == doctest::Approx(r.kv_scaled).epsilon(2e-14));
    if (r.iv < 1e300) CHECK(bessel_i(r.nu, r.x) == doctest::Approx(r.iv).epsilon(2e-14));
    if (r.kv > 1e-300) CHECK(bessel_k(r.nu, r.x) == doctest::Approx(r.kv).epsilon(2e-14));
  }
}

TEST_CASE("bessel wronskian identity") {
  // I_nu(x) K_{nu+1}(x) + I_{nu+1}(x) K_nu(x) = 1/x, scaled forms multiply out
  for (double nu : {0.0, 0.45, 1.0, 2.5, 7.0, 13.3, 19.0}) {
    for (double x : {1e-3, 0.1, 1.0, 4.0, 25.0, 80.0, 1000.0}) {
      CAPTURE(nu);
      CAPTURE(x);
      double w = bessel_i_scaled(nu, x) * bessel_k_scaled(nu + 1.0, x) +
                 bessel_i_scaled(nu + 1.0, x) * bessel_k_scaled(nu, x);
      CHECK(w * x == doctest::Approx(1.0).epsilon(5e-14));
    }
  }
}

TEST_CASE("half-integer bessel closed forms") {
  for (double x : {0.3, 1.0, 2.0, 10.0, 60.0}) {
    CAPTURE(x);
    CHECK(bessel_k_scaled(0.5, x) == doctest::Approx(std::sqrt(M_PI / (2.0 * x))).epsilon(1e-14));
    double i_half = std::sqrt(2.0 / (M_PI * x)) * std::sinh(x) * std::exp(-x);
    CHECK(bessel_i_scaled(0.5, x) == doctest::Approx(i_half).epsilon(1e-13));
  }
}

TEST_CASE("bessel domain checks") {
  CHECK(bessel_i(0.0, 0.0) == 1.0);
  CHECK(bessel_i(1.3, 0.0) == 0.0);
  CHECK_THROWS_AS(bessel_i(-0.5, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(bessel_i(21.5, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(bessel_k(0.5, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(bessel_k(0.5, -1.0), std::invalid_argument);
}
