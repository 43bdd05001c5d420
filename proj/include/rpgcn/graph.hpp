#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <queue>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "rpgcn/error.hpp"
#include "rpgcn/linalg.hpp"
#include "rpgcn/random.hpp"
#include "rpgcn/rptree.hpp"

namespace rpgcn {

using EdgeKey = std::pair<std::size_t, std::size_t>;  // first < second

/// Undirected weighted graph without self-loops. Edges are keyed by the
/// ordered pair (min, max), so symmetry holds by construction.
class WeightedGraph {
 public:
  WeightedGraph() = default;
  explicit WeightedGraph(std::size_t n) : n_(n) {}

  std::size_t size() const noexcept { return n_; }
  std::size_t edge_count() const noexcept { return edges_.size(); }
  const std::map<EdgeKey, double>& edges() const noexcept { return edges_; }

  /// Stores w for {i, j}. w must be finite and positive.
  void set_edge(std::size_t i, std::size_t j, double w) {
    if (i == j) throw Error(ErrorKind::InvalidArgument, "self-loops are not stored");
    if (i >= n_ || j >= n_) throw Error(ErrorKind::InvalidArgument, "edge endpoint out of range");
    if (!(w > 0.0) || !std::isfinite(w)) {
      throw Error(ErrorKind::InvalidArgument, "edge weight must be finite and > 0");
    }
    edges_[key(i, j)] = w;
  }

  bool has_edge(std::size_t i, std::size_t j) const { return edges_.count(key(i, j)) != 0; }

  double weight(std::size_t i, std::size_t j) const {
    if (i == j) return 0.0;
    const auto it = edges_.find(key(i, j));
    return it == edges_.end() ? 0.0 : it->second;
  }

  std::vector<double> degrees() const {
    std::vector<double> deg(n_, 0.0);
    for (const auto& [e, w] : edges_) {
      deg[e.first] += w;
      deg[e.second] += w;
    }
    return deg;
  }

  std::vector<std::vector<std::size_t>> adjacency_lists() const {
    std::vector<std::vector<std::size_t>> adj(n_);
    for (const auto& [e, w] : edges_) {
      adj[e.first].push_back(e.second);
      adj[e.second].push_back(e.first);
    }
    return adj;
  }

  Matrix to_dense() const {
    Matrix a(n_, n_);
    for (const auto& [e, w] : edges_) {
      a(e.first, e.second) = w;
      a(e.second, e.first) = w;
    }
    return a;
  }

  bool operator==(const WeightedGraph&) const = default;

  static EdgeKey key(std::size_t i, std::size_t j) noexcept {
    return i < j ? EdgeKey{i, j} : EdgeKey{j, i};
  }

 private:
  std::size_t n_ = 0;
  std::map<EdgeKey, double> edges_;
};

/// Sum of stored weights, each undirected edge counted once.
inline double total_weight(const WeightedGraph& g) {
  double s = 0.0;
  for (const auto& [e, w] : g.edges()) s += w;
  return s;
}

/// Sum over all entries of the symmetric adjacency matrix (each edge twice).
inline double total_weight_doubled(const WeightedGraph& g) { return 2.0 * total_weight(g); }

/// Connected-component id per node, ids assigned in order of first node.
inline std::vector<std::size_t> connected_components(const WeightedGraph& g) {
  constexpr auto unset = static_cast<std::size_t>(-1);
  const auto adj = g.adjacency_lists();
  std::vector<std::size_t> comp(g.size(), unset);
  std::size_t next = 0;
  for (std::size_t s = 0; s < g.size(); ++s) {
    if (comp[s] != unset) continue;
    std::queue<std::size_t> frontier;
    frontier.push(s);
    comp[s] = next;
    while (!frontier.empty()) {
      const auto u = frontier.front();
      frontier.pop();
      for (auto v : adj[u]) {
        if (comp[v] == unset) {
          comp[v] = next;
          frontier.push(v);
        }
      }
    }
    ++next;
  }
  return comp;
}

inline std::size_t count_components(const WeightedGraph& g) {
  const auto comp = connected_components(g);
  return comp.empty() ? 0 : *std::max_element(comp.begin(), comp.end()) + 1;
}

// ---------------------------------------------------------------------------
// rpForest

struct ForestOptions {
  std::size_t trees = 10;
  RpTreeOptions tree;
  unsigned threads = 1;
};

/// Seed of tree t. Depends only on (seed, t), so a forest of T trees is a
/// prefix of every larger forest with the same seed.
inline std::uint64_t tree_seed(std::uint64_t forest_seed, std::size_t t) {
  return derive_seed(forest_seed, 0x7265650000000000ULL + t);
}

/// Adds one to the count of every pair sharing a leaf of one tree.
inline void add_leaf_pairs(const std::vector<std::vector<std::size_t>>& tree_leaves,
                           std::map<EdgeKey, std::uint32_t>& counts) {
  for (const auto& leaf : tree_leaves) {
    for (std::size_t a = 0; a < leaf.size(); ++a)
      for (std::size_t b = a + 1; b < leaf.size(); ++b) ++counts[WeightedGraph::key(leaf[a], leaf[b])];
  }
}

/// Co-occurrence graph of explicit per-tree leaf partitions over n points.
inline WeightedGraph cooccurrence_graph(std::size_t n,
                                        const std::vector<std::vector<std::vector<std::size_t>>>& forest_leaves) {
  if (forest_leaves.empty()) throw Error(ErrorKind::InvalidArgument, "forest needs T >= 1");
  std::map<EdgeKey, std::uint32_t> counts;
  for (const auto& tree_leaves : forest_leaves) {
    for (const auto& leaf : tree_leaves)
      for (auto i : leaf)
        if (i >= n) throw Error(ErrorKind::InvalidArgument, "leaf index " + std::to_string(i) + " out of range");
    add_leaf_pairs(tree_leaves, counts);
  }
  WeightedGraph g(n);
  const double t = static_cast<double>(forest_leaves.size());
  for (const auto& [e, c] : counts) g.set_edge(e.first, e.second, static_cast<double>(c) / t);
  return g;
}

/// Number of trees in which each pair shares a leaf.
inline std::map<EdgeKey, std::uint32_t> forest_cooccurrence(const Matrix& x, std::uint64_t seed,
                                                            const ForestOptions& opts) {
  if (opts.trees < 1) throw Error(ErrorKind::InvalidArgument, "forest needs T >= 1");
  const std::size_t t_count = opts.trees;
  std::vector<std::vector<std::vector<std::size_t>>> leaves(t_count);
  auto work = [&](std::size_t first, std::size_t stride) {
    for (std::size_t t = first; t < t_count; t += stride) {
      leaves[t] = RpTree::build(x, tree_seed(seed, t), opts.tree).leaves();
    }
  };
  const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(opts.threads, t_count));
  if (workers == 1) {
    work(0, 1);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, w, workers);
  }

  std::map<EdgeKey, std::uint32_t> counts;
  for (const auto& tree_leaves : leaves) add_leaf_pairs(tree_leaves, counts);
  return counts;
}

/// Leaf co-occurrence graph: weight(i, j) = (#trees with i, j in one leaf) / T.
inline WeightedGraph build_rpforest_graph(const Matrix& x, std::uint64_t seed,
                                          const ForestOptions& opts) {
  WeightedGraph g(x.rows());
  const double t = static_cast<double>(opts.trees);
  for (const auto& [e, c] : forest_cooccurrence(x, seed, opts)) {
    g.set_edge(e.first, e.second, static_cast<double>(c) / t);
  }
  return g;
}

inline WeightedGraph build_rpforest_graph(const Matrix& x, std::size_t trees,
                                          std::size_t max_leaf_size, std::uint64_t seed) {
  ForestOptions opts;
  opts.trees = trees;
  opts.tree.max_leaf_size = max_leaf_size;
  return build_rpforest_graph(x, seed, opts);
}

// ---------------------------------------------------------------------------
// Distance-based baselines

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
  return s;
}

/// Indices of the k nearest other points of every row, nearest first.
/// Ties are broken by the smaller index.
inline std::vector<std::vector<std::size_t>> nearest_neighbors(const Matrix& x, std::size_t k) {
  const std::size_t n = x.rows();
  if (k < 1 || k >= n) {
    throw Error(ErrorKind::InvalidArgument,
                "k must satisfy 1 <= k < n (k=" + std::to_string(k) + ", n=" + std::to_string(n) + ")");
  }
  std::vector<std::vector<std::size_t>> out(n);
  std::vector<std::pair<double, std::size_t>> cand;
  cand.reserve(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    cand.clear();
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) cand.emplace_back(squared_distance(x.row(i), x.row(j)), j);
    }
    std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k), cand.end());
    out[i].reserve(k);
    for (std::size_t r = 0; r < k; ++r) out[i].push_back(cand[r].second);
  }
  return out;
}

/// Unweighted k-nn graph symmetrized by union.
inline WeightedGraph build_knn_graph(const Matrix& x, std::size_t k) {
  WeightedGraph g(x.rows());
  const auto nn = nearest_neighbors(x, k);
  for (std::size_t i = 0; i < nn.size(); ++i)
    for (auto j : nn[i]) g.set_edge(i, j, 1.0);
  return g;
}

inline constexpr double kDefaultPruneThreshold = 1e-12;

/// Complete Gaussian heat-kernel graph, weights exp(-d²/(2σ²)).
inline WeightedGraph build_heat_kernel_graph(const Matrix& x, double sigma,
                                             double prune = kDefaultPruneThreshold) {
  if (!(sigma > 0.0)) throw Error(ErrorKind::InvalidArgument, "sigma must be > 0");
  const std::size_t n = x.rows();
  WeightedGraph g(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double w = std::exp(-squared_distance(x.row(i), x.row(j)) / (2.0 * sigma * sigma));
      if (w >= prune) g.set_edge(i, j, w);
    }
  }
  return g;
}

/// Local scale of every point: distance to its K-th nearest neighbor.
/// Zero scales are replaced by the smallest positive one.
inline std::vector<double> local_scales(const Matrix& x, std::size_t kth) {
  const auto nn = nearest_neighbors(x, kth);
  std::vector<double> sigma(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    sigma[i] = std::sqrt(squared_distance(x.row(i), x.row(nn[i].back())));
  }
  double smallest = 0.0;
  for (double s : sigma) {
    if (s > 0.0 && (smallest == 0.0 || s < smallest)) smallest = s;
  }
  if (smallest == 0.0) {
    throw Error(ErrorKind::InvalidArgument,
                "every point coincides with its K-th neighbor; local scales are all zero");
  }
  for (double& s : sigma) {
    if (s == 0.0) s = smallest;
  }
  return sigma;
}

/// Self-tuning kernel graph, weights exp(-d²/(σᵢσⱼ)).
inline WeightedGraph build_self_tuning_graph(const Matrix& x, std::size_t kth = 7,
                                             double prune = kDefaultPruneThreshold) {
  const auto sigma = local_scales(x, kth);
  const std::size_t n = x.rows();
  WeightedGraph g(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double w = std::exp(-squared_distance(x.row(i), x.row(j)) / (sigma[i] * sigma[j]));
      if (w >= prune) g.set_edge(i, j, w);
    }
  }
  return g;
}

// ---------------------------------------------------------------------------
// Ablation

/// Adds ⌊percent/100 · |complement|⌋ uniformly chosen absent pairs at `weight`.
inline WeightedGraph add_complement_edges(const WeightedGraph& g, double percent, double weight,
                                          std::uint64_t seed) {
  if (!(percent >= 0.0 && percent <= 100.0)) {
    throw Error(ErrorKind::InvalidArgument, "percent must lie in [0, 100]");
  }
  if (!(weight > 0.0) || !std::isfinite(weight)) {
    throw Error(ErrorKind::InvalidArgument, "extra edge weight must be finite and > 0");
  }
  std::vector<EdgeKey> complement;
  const std::size_t n = g.size();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (!g.has_edge(i, j)) complement.emplace_back(i, j);

  const auto take = static_cast<std::size_t>(
      std::floor(percent / 100.0 * static_cast<double>(complement.size())));
  Rng rng(seed);
  for (std::size_t k = 0; k < take; ++k) {
    std::swap(complement[k], complement[k + rng.below(complement.size() - k)]);
  }
  WeightedGraph out = g;
  for (std::size_t k = 0; k < take; ++k) out.set_edge(complement[k].first, complement[k].second, weight);
  return out;
}

// ---------------------------------------------------------------------------
// Edge-list text format: "n=<count>" then "i,j,w" with i < j, one per line.

inline std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

inline void write_edge_list(std::ostream& out, const WeightedGraph& g) {
  out << "n=" << g.size() << '\n';
  for (const auto& [e, w] : g.edges()) out << e.first << ',' << e.second << ',' << format_double(w) << '\n';
}

inline WeightedGraph read_edge_list(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("n=", 0) != 0) {
    throw Error(ErrorKind::Parse, "edge list must start with 'n=<count>'");
  }
  std::size_t n = 0;
  {
    const auto* first = line.data() + 2;
    const auto* last = line.data() + line.size();
    const auto [ptr, ec] = std::from_chars(first, last, n);
    if (ec != std::errc{} || ptr != last) throw Error(ErrorKind::Parse, "bad header '" + line + "'");
  }
  WeightedGraph g(n);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto c1 = line.find(',');
    const auto c2 = c1 == std::string::npos ? c1 : line.find(',', c1 + 1);
    if (c2 == std::string::npos) {
      throw Error(ErrorKind::Parse, "line " + std::to_string(lineno) + ": expected i,j,w");
    }
    std::size_t i = 0;
    std::size_t j = 0;
    double w = 0.0;
    const char* s = line.data();
    const bool ok = std::from_chars(s, s + c1, i).ptr == s + c1 &&
                    std::from_chars(s + c1 + 1, s + c2, j).ptr == s + c2 &&
                    std::from_chars(s + c2 + 1, s + line.size(), w).ptr == s + line.size();
    if (!ok || i >= j) {
      throw Error(ErrorKind::Parse, "line " + std::to_string(lineno) + ": malformed edge '" + line + "'");
    }
    g.set_edge(i, j, w);
  }
  return g;
}

inline void save_edge_list(const std::string& path, const WeightedGraph& g) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot write '" + path + "'");
  write_edge_list(out, g);
}

inline WeightedGraph load_edge_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + path + "'");
  return read_edge_list(in);
}

}  // namespace rpgcn
