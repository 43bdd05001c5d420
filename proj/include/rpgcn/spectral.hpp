#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "rpgcn/error.hpp"
#include "rpgcn/graph.hpp"
#include "rpgcn/linalg.hpp"

namespace rpgcn {

inline constexpr double kZeroEigenvalueTolerance = 1e-8;
inline constexpr double kConnectThreshold = 1e-6;

/// L = D - A, or I - D^{-1/2} A D^{-1/2} when normalized.
inline Matrix graph_laplacian(const WeightedGraph& g, bool normalized) {
  const std::size_t n = g.size();
  const auto deg = g.degrees();
  Matrix l(n, n);
  if (!normalized) {
    for (std::size_t i = 0; i < n; ++i) l(i, i) = deg[i];
    for (const auto& [e, w] : g.edges()) {
      l(e.first, e.second) -= w;
      l(e.second, e.first) -= w;
    }
    return l;
  }
  std::vector<double> inv_sqrt(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(deg[i] > 0.0)) {
      throw Error(ErrorKind::InvalidArgument,
                  "node " + std::to_string(i) + " is isolated; normalized Laplacian undefined");
    }
    inv_sqrt[i] = 1.0 / std::sqrt(deg[i]);
    l(i, i) = 1.0;
  }
  for (const auto& [e, w] : g.edges()) {
    const double v = w * inv_sqrt[e.first] * inv_sqrt[e.second];
    l(e.first, e.second) -= v;
    l(e.second, e.first) -= v;
  }
  return l;
}

struct Eigenpair {
  double value = 0.0;
  std::vector<double> vector;
};

namespace detail {

inline void orient_first_nonzero_positive(std::vector<double>& v) {
  for (double x : v) {
    if (std::abs(x) > 1e-12) {
      if (x < 0.0)
        for (double& y : v) y = -y;
      return;
    }
  }
}

inline double population_sd(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  return std::sqrt(var / static_cast<double>(v.size()));
}

}  // namespace detail

/// Eigenpair at the smallest eigenvalue; the first clearly nonzero entry of
/// the vector is made positive.
inline Eigenpair smallest_eigenvector(const Matrix& l) {
  const auto eig = sym_eig(l);
  Eigenpair out{eig.values.empty() ? 0.0 : eig.values.front(), {}};
  out.vector.resize(l.rows());
  for (std::size_t i = 0; i < l.rows(); ++i) out.vector[i] = eig.vectors(i, 0);
  detail::orient_first_nonzero_positive(out.vector);
  return out;
}

struct ConnectivityReport {
  double std_v0 = 0.0;
  std::size_t zero_eigenvalues = 0;  // eigenvalues of L below kZeroEigenvalueTolerance
  std::size_t components = 0;        // breadth-first search count
};

/// Spread of the smallest Laplacian eigenvector; near zero iff connected.
///
/// With a zero eigenvalue of multiplicity >= 2 the solver's v0 is an arbitrary
/// null-space vector. In that case the null-space vector with the largest
/// component orthogonal to the constant vector is taken instead, after
/// removing that constant component. A unit vector with zero mean has
/// population sd exactly 1/sqrt(n), so disconnected graphs report that value.
inline ConnectivityReport connectivity(const WeightedGraph& g) {
  ConnectivityReport report;
  const std::size_t n = g.size();
  report.components = count_components(g);
  if (n <= 1) {
    report.zero_eigenvalues = n;
    return report;
  }
  const auto eig = sym_eig(graph_laplacian(g, false));
  while (report.zero_eigenvalues < n && eig.values[report.zero_eigenvalues] < kZeroEigenvalueTolerance)
    ++report.zero_eigenvalues;

  std::vector<double> v(n);
  if (report.zero_eigenvalues <= 1) {
    for (std::size_t i = 0; i < n; ++i) v[i] = eig.vectors(i, 0);
    report.std_v0 = detail::population_sd(v);
    return report;
  }

  double best_norm = -1.0;
  std::vector<double> best;
  for (std::size_t k = 0; k < report.zero_eigenvalues; ++k) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += eig.vectors(i, k);
    mean /= static_cast<double>(n);
    double norm = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      v[i] = eig.vectors(i, k) - mean;
      norm += v[i] * v[i];
    }
    if (norm > best_norm) {
      best_norm = norm;
      best = v;
    }
  }
  const double scale = 1.0 / std::sqrt(best_norm);
  for (double& x : best) x *= scale;
  report.std_v0 = detail::population_sd(best);
  return report;
}

inline double connectivity_std(const WeightedGraph& g) { return connectivity(g).std_v0; }

struct SweepPoint {
  std::size_t trees = 0;
  double std_v0 = 0.0;
  std::size_t components = 0;
};

struct SweepCurve {
  std::string dataset;
  std::uint64_t seed = 0;
  std::vector<SweepPoint> points;
};

/// Connectivity of nested rpForest graphs for every T in `tree_counts`.
/// Trees are shared across T, so each larger forest extends the smaller one.
inline SweepCurve sweep_trees(const Matrix& x, const std::vector<std::size_t>& tree_counts,
                              const RpTreeOptions& tree_opts, std::uint64_t seed,
                              std::string dataset = {}) {
  if (tree_counts.empty()) throw Error(ErrorKind::InvalidArgument, "sweep needs at least one T");
  for (std::size_t k = 0; k < tree_counts.size(); ++k) {
    if (tree_counts[k] < 1 || (k > 0 && tree_counts[k] <= tree_counts[k - 1])) {
      throw Error(ErrorKind::InvalidArgument, "tree counts must be positive and strictly increasing");
    }
  }
  SweepCurve curve{std::move(dataset), seed, {}};
  std::map<EdgeKey, std::uint32_t> counts;
  std::size_t built = 0;
  for (const auto t_target : tree_counts) {
    for (; built < t_target; ++built) {
      add_leaf_pairs(RpTree::build(x, tree_seed(seed, built), tree_opts).leaves(), counts);
    }
    WeightedGraph g(x.rows());
    for (const auto& [e, c] : counts) {
      g.set_edge(e.first, e.second, static_cast<double>(c) / static_cast<double>(t_target));
    }
    const auto report = connectivity(g);
    curve.points.push_back({t_target, report.std_v0, report.components});
  }
  return curve;
}

struct Elbow {
  std::size_t trees = 0;
  bool no_connect = false;  // no point fell below the threshold; second-difference fallback
};

/// First T whose std_v0 is below `threshold`, else the point of largest
/// discrete second difference.
inline Elbow detect_elbow(const SweepCurve& curve, double threshold = kConnectThreshold) {
  const auto& p = curve.points;
  if (p.size() < 3) {
    throw Error(ErrorKind::InvalidArgument,
                "elbow detection needs at least 3 sweep points, got " + std::to_string(p.size()));
  }
  for (const auto& point : p) {
    if (point.std_v0 < threshold) return {point.trees, false};
  }
  std::size_t best = 1;
  double best_curvature = -1e300;
  for (std::size_t i = 1; i + 1 < p.size(); ++i) {
    const double curvature = p[i - 1].std_v0 - 2.0 * p[i].std_v0 + p[i + 1].std_v0;
    if (curvature > best_curvature) {
      best_curvature = curvature;
      best = i;
    }
  }
  return {p[best].trees, true};
}

}  // namespace rpgcn
