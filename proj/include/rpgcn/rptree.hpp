#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "rpgcn/error.hpp"
#include "rpgcn/linalg.hpp"
#include "rpgcn/random.hpp"

namespace rpgcn {

enum class SplitRule {
  Quantile,  // threshold is a random quantile in [1/4, 3/4] of the projections
  Range,     // threshold is a random fraction in [1/4, 3/4] of the projected range
  Median,    // quantile fixed at 1/2
};

inline SplitRule parse_split_rule(const std::string& s) {
  if (s == "quantile") return SplitRule::Quantile;
  if (s == "range") return SplitRule::Range;
  if (s == "median") return SplitRule::Median;
  throw Error(ErrorKind::InvalidArgument, "unknown split rule '" + s + "'");
}

inline const char* to_string(SplitRule rule) {
  switch (rule) {
    case SplitRule::Quantile: return "quantile";
    case SplitRule::Range: return "range";
    case SplitRule::Median: return "median";
  }
  return "?";
}

struct RpTreeOptions {
  std::size_t max_leaf_size = 20;
  SplitRule split_rule = SplitRule::Quantile;
  int degenerate_retries = 3;
};

struct RpInternal {
  std::vector<double> direction;
  double threshold = 0.0;
  std::size_t left = 0;   // index into RpTree::nodes()
  std::size_t right = 0;
};

struct RpLeaf {
  std::vector<std::size_t> indices;
  bool unsplittable = false;  // every sampled direction saw identical projections
};

using RpNode = std::variant<RpInternal, RpLeaf>;

/// Dot product of each selected row with `direction`.
inline std::vector<double> project(const Matrix& x, std::span<const std::size_t> indices,
                                   std::span<const double> direction) {
  if (direction.size() != x.cols()) {
    throw Error(ErrorKind::DimensionMismatch,
                "direction has " + std::to_string(direction.size()) + " components, data has " +
                    std::to_string(x.cols()));
  }
  std::vector<double> out;
  out.reserve(indices.size());
  for (auto i : indices) {
    if (i >= x.rows()) throw Error(ErrorKind::InvalidArgument, "point index out of range");
    const auto row = x.row(i);
    double s = 0.0;
    for (std::size_t k = 0; k < row.size(); ++k) s += row[k] * direction[k];
    out.push_back(s);
  }
  return out;
}

/// Linear-interpolation quantile of an ascending sequence, q in [0, 1].
inline double sorted_quantile(std::span<const double> sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

/// Random projection tree over the rows of a feature matrix.
///
/// Every node draws from its own generator seeded by (tree seed, path from
/// the root), so the shape does not depend on construction order.
class RpTree {
 public:
  static RpTree build(const Matrix& x, std::uint64_t seed, const RpTreeOptions& opts = {}) {
    if (x.rows() < 1) throw Error(ErrorKind::InvalidArgument, "build_tree needs n >= 1");
    if (x.cols() < 1) throw Error(ErrorKind::InvalidArgument, "build_tree needs d >= 1");
    if (opts.max_leaf_size < 1) throw Error(ErrorKind::InvalidArgument, "max_leaf_size must be >= 1");
    RpTree tree;
    tree.n_ = x.rows();
    tree.max_leaf_size_ = opts.max_leaf_size;
    tree.seed_ = seed;
    std::vector<std::size_t> all(x.rows());
    std::iota(all.begin(), all.end(), std::size_t{0});
    tree.grow(x, std::move(all), derive_seed(seed, 1), opts);
    return tree;
  }

  std::size_t size() const noexcept { return n_; }
  std::size_t max_leaf_size() const noexcept { return max_leaf_size_; }
  std::uint64_t seed() const noexcept { return seed_; }
  const std::vector<RpNode>& nodes() const noexcept { return nodes_; }
  const RpNode& root() const { return nodes_.front(); }

  /// Leaf index sets in left-to-right order.
  std::vector<std::vector<std::size_t>> leaves() const {
    std::vector<std::vector<std::size_t>> out;
    collect(0, out);
    return out;
  }

  bool operator==(const RpTree& other) const {
    if (n_ != other.n_ || nodes_.size() != other.nodes_.size()) return false;
    for (std::size_t k = 0; k < nodes_.size(); ++k) {
      if (nodes_[k].index() != other.nodes_[k].index()) return false;
      if (const auto* a = std::get_if<RpInternal>(&nodes_[k])) {
        const auto& b = std::get<RpInternal>(other.nodes_[k]);
        if (a->direction != b.direction || a->threshold != b.threshold || a->left != b.left ||
            a->right != b.right)
          return false;
      } else {
        const auto& a_leaf = std::get<RpLeaf>(nodes_[k]);
        const auto& b_leaf = std::get<RpLeaf>(other.nodes_[k]);
        if (a_leaf.indices != b_leaf.indices || a_leaf.unsplittable != b_leaf.unsplittable)
          return false;
      }
    }
    return true;
  }

 private:
  std::size_t grow(const Matrix& x, std::vector<std::size_t> indices, std::uint64_t node_seed,
                   const RpTreeOptions& opts) {
    const std::size_t id = nodes_.size();
    if (indices.size() <= opts.max_leaf_size) {
      nodes_.emplace_back(RpLeaf{std::move(indices), false});
      return id;
    }
    nodes_.emplace_back(RpLeaf{});  // placeholder, replaced below

    Rng rng(node_seed);
    const std::size_t d = x.cols();
    for (int attempt = 0; attempt <= opts.degenerate_retries; ++attempt) {
      std::vector<double> direction(d);
      double norm = 0.0;
      while (norm == 0.0) {
        for (auto& v : direction) v = rng.normal();
        norm = std::sqrt(std::inner_product(direction.begin(), direction.end(), direction.begin(), 0.0));
      }
      for (auto& v : direction) v /= norm;
      const double q = opts.split_rule == SplitRule::Median ? 0.5 : rng.uniform(0.25, 0.75);

      const auto proj = project(x, indices, direction);
      auto sorted = proj;
      std::sort(sorted.begin(), sorted.end());
      if (sorted.front() == sorted.back()) continue;  // degenerate along this direction

      double threshold = opts.split_rule == SplitRule::Range
                             ? sorted.front() + q * (sorted.back() - sorted.front())
                             : sorted_quantile(sorted, q);
      if (threshold >= sorted.back()) {
        // Ties at the maximum would empty the right child; cut just below it.
        threshold = *(std::lower_bound(sorted.begin(), sorted.end(), sorted.back()) - 1);
      }

      std::vector<std::size_t> left;
      std::vector<std::size_t> right;
      for (std::size_t k = 0; k < indices.size(); ++k) {
        (proj[k] <= threshold ? left : right).push_back(indices[k]);
      }
      const std::size_t left_id = grow(x, std::move(left), derive_seed(node_seed, 2), opts);
      const std::size_t right_id = grow(x, std::move(right), derive_seed(node_seed, 3), opts);
      nodes_[id] = RpInternal{std::move(direction), threshold, left_id, right_id};
      return id;
    }
    nodes_[id] = RpLeaf{std::move(indices), true};
    return id;
  }

  void collect(std::size_t id, std::vector<std::vector<std::size_t>>& out) const {
    if (const auto* internal = std::get_if<RpInternal>(&nodes_[id])) {
      collect(internal->left, out);
      collect(internal->right, out);
    } else {
      out.push_back(std::get<RpLeaf>(nodes_[id]).indices);
    }
  }

  std::vector<RpNode> nodes_;
  std::size_t n_ = 0;
  std::size_t max_leaf_size_ = 0;
  std::uint64_t seed_ = 0;
};

inline RpTree build_tree(const Matrix& x, std::size_t max_leaf_size, std::uint64_t seed,
                         SplitRule rule = SplitRule::Quantile) {
  return RpTree::build(x, seed, RpTreeOptions{max_leaf_size, rule, 3});
}

}  // namespace rpgcn
