#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "krein/extension.hpp"
#include "krein/grid.hpp"
#include "krein/spectral.hpp"

namespace krein {

struct NodalComponent {
  int sign = 0;           // +1 or -1
  std::size_t cells = 0;  // lattice cells carrying this label
};

// Connected components of {|u| > threshold} over the (s_level x x) lattice,
// 4-neighbour adjacency between same-sign cells, x-direction wraparound
// matching the periodic grid.  labels is level-major; -1 marks background.
struct NodalLabeling {
  std::vector<double> s_levels;
  std::size_t n = 0;
  double X = 0.0;
  std::vector<std::int32_t> labels;
  std::size_t count = 0;
  std::vector<NodalComponent> components;  // indexed by label
  double threshold = 0.0;                  // absolute cutoff applied to |u|
  bool all_background = false;             // warning: nothing above threshold

  std::int32_t label(std::size_t level, std::size_t j) const { return labels[level * n + j]; }
};

// Label the near-zero set by a relative threshold: cells with
// |u| <= rel_threshold * max|u| are background.  rel_threshold in (0, 0.1).
NodalLabeling nodal_components(const HalfSpaceField& u, double rel_threshold = 1e-5);

// Lattice-level variant used by the field version (and directly testable on
// hand-built matrices): rows x n cells in row-major order, absolute
// threshold, optional x wraparound.
NodalLabeling label_matrix(std::size_t rows, std::size_t n, const std::vector<double>& cells,
                           double abs_threshold, bool wrap_x);

// Sign runs of a periodic boundary trace: maximal circular arcs of constant
// sign separated by background cells or sign changes.
std::size_t boundary_nodal_count(const GridFunction& f, double rel_threshold = 1e-5);

// Courant-Hilbert verdict for the n-th eigenfunction (1-based).  The weak
// bound is max{j : mu_j in the multiplicity cluster of mu_n}, the strong
// bound min{j : ...}; the strong form is a theorem only for strings with
// positive locally Lipschitz density, so it is asserted only when the
// problem's psi source carries that flag.
struct CourantVerdict {
  std::size_t n = 0;
  double mu_n = 0.0;
  std::size_t count = 0;
  std::size_t weak_bound = 0;
  std::size_t strong_bound = 0;
  bool weak_pass = false;
  bool strong_pass = false;
  bool strong_asserted = false;
};

CourantVerdict courant_check(const SpectralProblem& pb, std::size_t n,
                             const NodalLabeling& labeling, const EigenResult& eig,
                             double tol_mult = 1e-6);

// Component counts across a ladder of relative thresholds (defaults
// {1e-6, 1e-5, 1e-4, 1e-3}); stable when all counts agree, with spread
// beyond 10 percent flagged as a resolution warning.
struct ThresholdSweep {
  std::vector<double> thresholds;
  std::vector<std::size_t> counts;
  bool stable = false;
  bool resolution_warning = false;
};

ThresholdSweep threshold_sweep(const HalfSpaceField& u,
                               const std::vector<double>& thresholds = {});

// "x,s0,s1,..." header then one row per grid point with integer labels.
std::string to_csv(const NodalLabeling& labeling);

}  // namespace krein
