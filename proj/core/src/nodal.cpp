#include "krein/nodal.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "krein/util.hpp"

namespace krein {

namespace {

// Union-find over cell indices, path halving + union by size.
struct UnionFind {
  std::vector<std::int32_t> parent;
  std::vector<std::int32_t> size;

  explicit UnionFind(std::size_t n) : parent(n), size(n, 1) {
    for (std::size_t i = 0; i < n; ++i) parent[i] = static_cast<std::int32_t>(i);
  }

  std::int32_t find(std::int32_t a) {
    while (parent[a] != a) {
      parent[a] = parent[parent[a]];
      a = parent[a];
    }
    return a;
  }

  void unite(std::int32_t a, std::int32_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (size[a] < size[b]) std::swap(a, b);
    parent[b] = a;
    size[a] += size[b];
  }
};

int sign_of(double v, double threshold) {
  if (std::abs(v) <= threshold) return 0;
  return v > 0.0 ? 1 : -1;
}

}  // namespace

NodalLabeling label_matrix(std::size_t rows, std::size_t n, const std::vector<double>& cells,
                           double abs_threshold, bool wrap_x) {
  if (rows == 0 || n == 0 || cells.size() != rows * n)
    throw std::invalid_argument("nodal: cell matrix shape mismatch");
  if (!(abs_threshold >= 0.0) || !std::isfinite(abs_threshold))
    throw std::invalid_argument("nodal: threshold must be finite and >= 0");
  for (double v : cells)
    if (!std::isfinite(v)) throw std::invalid_argument("nodal: non-finite cell value");

  NodalLabeling out;
  out.n = n;
  out.threshold = abs_threshold;
  out.labels.assign(rows * n, -1);

  std::vector<int> sgn(rows * n);
  bool any = false;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    sgn[c] = sign_of(cells[c], abs_threshold);
    any = any || sgn[c] != 0;
  }
  if (!any) {
    out.all_background = true;
    return out;
  }

  UnionFind uf(rows * n);
  for (std::size_t l = 0; l < rows; ++l)
    for (std::size_t j = 0; j < n; ++j) {
      std::size_t c = l * n + j;
      if (sgn[c] == 0) continue;
      // right neighbour (wrapping) and the level above; the other two
      // directions are covered symmetrically as the scan passes them.
      if (j + 1 < n || wrap_x) {
        std::size_t r = l * n + (j + 1) % n;
        if (r != c && sgn[r] == sgn[c])
          uf.unite(static_cast<std::int32_t>(c), static_cast<std::int32_t>(r));
      }
      if (l + 1 < rows) {
        std::size_t d = (l + 1) * n + j;
        if (sgn[d] == sgn[c])
          uf.unite(static_cast<std::int32_t>(c), static_cast<std::int32_t>(d));
      }
    }

  // Compact labels in first-seen row-major order so the output is
  // deterministic independent of union order.
  std::vector<std::int32_t> root_label(rows * n, -1);
  for (std::size_t c = 0; c < cells.size(); ++c) {
    if (sgn[c] == 0) continue;
    std::int32_t r = uf.find(static_cast<std::int32_t>(c));
    if (root_label[r] < 0) {
      root_label[r] = static_cast<std::int32_t>(out.components.size());
      NodalComponent comp;
      comp.sign = sgn[c];
      out.components.push_back(comp);
    }
    std::int32_t lab = root_label[r];
    out.labels[c] = lab;
    ++out.components[static_cast<std::size_t>(lab)].cells;
  }
  out.count = out.components.size();
  return out;
}

NodalLabeling nodal_components(const HalfSpaceField& u, double rel_threshold) {
  u.validate();
  if (!(rel_threshold > 0.0) || !(rel_threshold < 0.1))
    throw std::invalid_argument("nodal: rel_threshold must lie in (0, 0.1)");

  double maxabs = 0.0;
  for (const auto& row : u.values)
    for (double v : row) maxabs = std::max(maxabs, std::abs(v));

  std::vector<double> cells;
  cells.reserve(u.s_levels.size() * u.n);
  for (const auto& row : u.values) cells.insert(cells.end(), row.begin(), row.end());

  NodalLabeling out =
      label_matrix(u.s_levels.size(), u.n, cells, rel_threshold * maxabs, true);
  out.s_levels = u.s_levels;
  out.X = u.X;
  return out;
}

std::size_t boundary_nodal_count(const GridFunction& f, double rel_threshold) {
  f.validate();
  if (!(rel_threshold > 0.0) || !(rel_threshold < 0.1))
    throw std::invalid_argument("nodal: rel_threshold must lie in (0, 0.1)");

  double maxabs = 0.0;
  for (double v : f.values) maxabs = std::max(maxabs, std::abs(v));
  double threshold = rel_threshold * maxabs;

  std::vector<int> sgn(f.n);
  bool any = false;
  for (std::size_t j = 0; j < f.n; ++j) {
    sgn[j] = sign_of(f.values[j], threshold);
    any = any || sgn[j] != 0;
  }
  if (!any) return 0;

  // Count circular run starts: foreground cells whose predecessor is
  // background or carries the other sign.
  std::size_t starts = 0;
  for (std::size_t j = 0; j < f.n; ++j) {
    if (sgn[j] == 0) continue;
    int prev = sgn[(j + f.n - 1) % f.n];
    if (prev != sgn[j]) ++starts;
  }
  return starts == 0 ? 1 : starts;  // no start: one constant-sign full circle
}

CourantVerdict courant_check(const SpectralProblem& pb, std::size_t n,
                             const NodalLabeling& labeling, const EigenResult& eig,
                             double tol_mult) {
  if (n == 0) throw std::invalid_argument("courant check: n is 1-based");
  if (n >= eig.eigenvalues.size())
    throw std::invalid_argument("courant check: eigenvalues beyond index n required");
  if (!(tol_mult >= 0.0) || !std::isfinite(tol_mult))
    throw std::invalid_argument("courant check: bad multiplicity tolerance");

  CourantVerdict v;
  v.n = n;
  v.mu_n = eig.eigenvalues[n - 1];
  v.count = labeling.count;

  double scale = std::max(std::abs(v.mu_n), 1.0);
  std::size_t lo = n, hi = n;
  while (lo > 1 && std::abs(eig.eigenvalues[lo - 2] - v.mu_n) <= tol_mult * scale) --lo;
  while (hi < eig.eigenvalues.size() &&
         std::abs(eig.eigenvalues[hi] - v.mu_n) <= tol_mult * scale)
    ++hi;
  v.weak_bound = hi;
  v.strong_bound = lo;
  v.weak_pass = v.count <= v.weak_bound;
  v.strong_pass = v.count <= v.strong_bound;
  v.strong_asserted = pb.source.positive_lipschitz();
  return v;
}

ThresholdSweep threshold_sweep(const HalfSpaceField& u, const std::vector<double>& thresholds) {
  ThresholdSweep sweep;
  sweep.thresholds = thresholds.empty()
                         ? std::vector<double>{1e-6, 1e-5, 1e-4, 1e-3}
                         : thresholds;
  for (double t : sweep.thresholds) sweep.counts.push_back(nodal_components(u, t).count);

  std::size_t cmin = *std::min_element(sweep.counts.begin(), sweep.counts.end());
  std::size_t cmax = *std::max_element(sweep.counts.begin(), sweep.counts.end());
  sweep.stable = cmin == cmax;
  sweep.resolution_warning =
      cmax > 0 && static_cast<double>(cmax - cmin) > 0.1 * static_cast<double>(cmax);
  return sweep;
}

std::string to_csv(const NodalLabeling& labeling) {
  std::ostringstream out;
  out << "x";
  for (double s : labeling.s_levels) out << ',' << format_g17(s);
  out << '\n';
  const std::size_t rows = labeling.labels.size() / labeling.n;
  const GridFunction base = make_grid(labeling.n, labeling.X);
  for (std::size_t j = 0; j < labeling.n; ++j) {
    out << format_g17(base.x(j));
    for (std::size_t l = 0; l < rows; ++l) out << ',' << labeling.label(l, j);
    out << '\n';
  }
  return out.str();
}

}  // namespace krein
