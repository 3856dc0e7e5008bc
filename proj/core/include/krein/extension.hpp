#pragma once

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "krein/catalog.hpp"
#include "krein/grid.hpp"
#include "krein/ode.hpp"

namespace krein {

// Source of the multiplier psi(xi^2) and the per-mode profiles phi(xi^2, s):
// either a string (solved on demand, profiles cached per distinct lambda), a
// closed-form pair, or the identity multiplier lambda (the free Laplacian).
// Copies share one cache; reads are safe after a prepare() build phase.
class PsiSource {
 public:
  PsiSource();  // identity multiplier, psi(lambda) = lambda

  static PsiSource laplacian();
  static PsiSource from_string(KreinString str, PsiOptions opt = {});
  // psi0 is the value used at lambda = 0 (closed forms are often 0/0 there)
  static PsiSource closed_form(std::string tag, std::function<double(double)> psi,
                               double psi0,
                               std::function<double(double, double)> phi = {});
  // closed-form psi from the catalog entry; profiles come from its string
  static PsiSource from_entry(const CatalogEntry& entry, PsiOptions opt = {});

  double psi(double lambda) const;
  double phi(double lambda, double s) const;
  bool has_phi() const;
  // warm the psi/profile caches for these lambdas in parallel (string source)
  void prepare(const std::vector<double>& lambdas, bool with_profiles) const;
  // finite right end of the profile domain (inf when unconstrained)
  double profile_end() const;
  const KreinString* string() const;
  const std::string& tag() const { return tag_; }
  // density positive and locally Lipschitz (catalog metadata); gates the
  // strong Courant bound
  bool positive_lipschitz() const { return positive_lipschitz_; }

 private:
  struct StringCache;
  std::string tag_;
  std::function<double(double)> psi_fn_;       // empty -> use string
  std::function<double(double, double)> phi_fn_;  // empty -> use string
  double psi0_ = 0.0;
  bool positive_lipschitz_ = false;
  std::shared_ptr<StringCache> cache_;  // string-backed sources only
};

// u(s_j, x_k) on the product of an s-level ladder and the periodic x-grid;
// row 0 is the boundary function.
struct HalfSpaceField {
  std::vector<double> s_levels;  // increasing, s_levels[0] = 0
  std::size_t n = 0;
  double X = 0.0;
  std::vector<std::vector<double>> values;  // [level][x index]

  void validate() const;
  GridFunction row(std::size_t level) const;
};

// {0} followed by count-1 geometric knots from 1e-4 * s_max to s_max.
std::vector<double> default_s_levels(double s_max, std::size_t count);

// Harmonic extension: each mode xi of f multiplied by phi(xi^2, s) per level.
// The xi = 0 mode uses phi_0 = 1 (natural/neumann end) or 1 - s/R (dirichlet).
HalfSpaceField harmonic_extension(const PsiSource& src, const GridFunction& f,
                                  const std::vector<double>& s_levels);

// psi(-Delta) f: multiplier psi(xi^2) in frequency space (= -d/ds of the
// harmonic extension at s = 0).
GridFunction dtn_apply(const PsiSource& src, const GridFunction& f);

// Boundary energy form: sum over the frequency set of psi(xi^2) |f^(xi)|^2 dxi.
double form_boundary(const PsiSource& src, const GridFunction& f);

// Half-space energy: int (ds u)^2 dx ds + int |grad_x u|^2 dx A(ds) with
// second-order differences in s, spectral x-derivatives, trapezoid s-quadrature
// against the level knots, and atoms of A added exactly.
double form_halfspace(const KreinString& str, const HalfSpaceField& u);

// CSV matrix: header "x" + s-knots, one row per grid point.
std::string to_csv(const HalfSpaceField& u);

}  // namespace krein
