#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rpgcn/error.hpp"
#include "rpgcn/linalg.hpp"
#include "rpgcn/random.hpp"

namespace rpgcn {

struct Dataset {
  std::string name;
  Matrix x;                // n×d features
  std::vector<int> labels;  // 0..c-1

  std::size_t size() const noexcept { return x.rows(); }
  std::size_t dims() const noexcept { return x.cols(); }
  int num_classes() const {
    return labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
  }
};

/// Throws unless every class in 0..c-1 is populated and features are finite.
inline void validate(const Dataset& ds) {
  if (ds.size() < 2) throw Error(ErrorKind::InvalidArgument, "dataset needs at least 2 points");
  if (ds.dims() < 1) throw Error(ErrorKind::InvalidArgument, "dataset needs at least 1 feature");
  if (ds.labels.size() != ds.size()) {
    throw Error(ErrorKind::DimensionMismatch, "label count differs from row count");
  }
  if (!all_finite(ds.x)) throw Error(ErrorKind::InvalidArgument, "non-finite feature value");
  std::vector<std::size_t> counts(static_cast<std::size_t>(ds.num_classes()), 0);
  for (int y : ds.labels) {
    if (y < 0) throw Error(ErrorKind::InvalidArgument, "negative label");
    ++counts[static_cast<std::size_t>(y)];
  }
  for (std::size_t c = 0; c < counts.size(); ++c) {
    if (counts[c] == 0) {
      throw Error(ErrorKind::InvalidArgument, "class " + std::to_string(c) + " is empty");
    }
  }
}

struct RingSpec {
  double radius;
  std::size_t count;
  double noise_sd;
};

struct BlobSpec {
  std::size_t count;
  double noise_sd;
};

/// Concentric rings around the origin, one class per ring; an optional
/// central blob becomes the last class.
inline Dataset gen_rings(const std::vector<RingSpec>& rings, std::optional<BlobSpec> center_blob,
                         std::uint64_t seed, std::string name = "rings") {
  if (rings.empty()) throw Error(ErrorKind::InvalidArgument, "gen_rings needs at least one ring");
  std::size_t n = center_blob ? center_blob->count : 0;
  for (const auto& r : rings) {
    if (r.count < 1 || r.noise_sd < 0.0) {
      throw Error(ErrorKind::InvalidArgument, "ring count must be >= 1 and noise_sd >= 0");
    }
    n += r.count;
  }
  if (center_blob && (center_blob->count < 1 || center_blob->noise_sd < 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "center blob count must be >= 1 and noise_sd >= 0");
  }

  Rng rng(seed);
  Dataset ds{std::move(name), Matrix(n, 2), {}};
  ds.labels.reserve(n);
  std::size_t row = 0;
  for (std::size_t k = 0; k < rings.size(); ++k) {
    for (std::size_t i = 0; i < rings[k].count; ++i, ++row) {
      const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
      const double r = rings[k].radius + (rings[k].noise_sd > 0.0 ? rng.normal(0.0, rings[k].noise_sd) : 0.0);
      ds.x(row, 0) = r * std::cos(angle);
      ds.x(row, 1) = r * std::sin(angle);
      ds.labels.push_back(static_cast<int>(k));
    }
  }
  if (center_blob) {
    for (std::size_t i = 0; i < center_blob->count; ++i, ++row) {
      ds.x(row, 0) = rng.normal(0.0, center_blob->noise_sd);
      ds.x(row, 1) = rng.normal(0.0, center_blob->noise_sd);
      ds.labels.push_back(static_cast<int>(rings.size()));
    }
  }
  return ds;
}

struct ClusterSpec {
  double cx;
  double cy;
  std::size_t count;
  double sd;
};

/// Isotropic Gaussian blobs in the plane, one class per blob.
inline Dataset gen_clusters(const std::vector<ClusterSpec>& clusters, std::uint64_t seed,
                            std::string name = "clusters") {
  if (clusters.empty()) {
    throw Error(ErrorKind::InvalidArgument, "gen_clusters needs at least one cluster");
  }
  std::size_t n = 0;
  for (const auto& c : clusters) {
    if (c.count < 1 || c.sd < 0.0) {
      throw Error(ErrorKind::InvalidArgument, "cluster count must be >= 1 and sd >= 0");
    }
    n += c.count;
  }
  Rng rng(seed);
  Dataset ds{std::move(name), Matrix(n, 2), {}};
  ds.labels.reserve(n);
  std::size_t row = 0;
  for (std::size_t k = 0; k < clusters.size(); ++k) {
    const auto& c = clusters[k];
    for (std::size_t i = 0; i < c.count; ++i, ++row) {
      ds.x(row, 0) = c.sd > 0.0 ? rng.normal(c.cx, c.sd) : c.cx;
      ds.x(row, 1) = c.sd > 0.0 ? rng.normal(c.cy, c.sd) : c.cy;
      ds.labels.push_back(static_cast<int>(k));
    }
  }
  return ds;
}

/// Names accepted by make_preset().
inline const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{"ring238", "3rings299", "sparse303", "sparse622"};
  return names;
}

/// Look-alikes of the four 2D benchmark sets. Sizes follow the names;
/// radii, centers and spreads are chosen by eye.
inline Dataset make_preset(const std::string& name, std::uint64_t seed) {
  if (name == "ring238") {
    return gen_rings({{1.0, 100, 0.1}, {3.0, 138, 0.1}}, std::nullopt, seed, name);
  }
  if (name == "3rings299") {
    return gen_rings({{1.0, 50, 0.1}, {2.5, 100, 0.1}, {4.0, 149, 0.1}}, std::nullopt, seed, name);
  }
  if (name == "sparse303") {
    return gen_clusters({{0.0, 0.0, 101, 1.0}, {4.0, 0.0, 101, 1.0}, {2.0, 3.5, 101, 1.0}}, seed,
                        name);
  }
  if (name == "sparse622") {
    return gen_clusters({{0.0, 0.0, 311, 1.2}, {3.5, 1.0, 311, 1.2}}, seed, name);
  }
  throw Error(ErrorKind::InvalidArgument, "unknown dataset preset '" + name + "'");
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '"'))
    s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    cells.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return cells;
}

inline std::optional<double> parse_double(std::string_view s) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

}  // namespace detail

/// Reads a headed CSV. Labels are re-encoded to 0..c-1 by first appearance.
inline Dataset load_csv(const std::string& path, const std::string& label_column) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::Parse, path + ": missing header row");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  const auto header_views = detail::split_commas(line);
  std::vector<std::string> header(header_views.begin(), header_views.end());
  const auto label_it = std::find(header.begin(), header.end(), label_column);
  if (label_it == header.end()) {
    throw Error(ErrorKind::Parse, path + ": no column named '" + label_column + "'");
  }
  const auto label_idx = static_cast<std::size_t>(label_it - header.begin());
  const std::size_t d = header.size() - 1;
  if (d == 0) throw Error(ErrorKind::Parse, path + ": no feature columns");

  std::vector<double> values;
  std::vector<int> labels;
  std::map<std::string, int, std::less<>> encoding;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (detail::trim(line).empty()) continue;
    ++row;
    const auto cells = detail::split_commas(line);
    if (cells.size() != header.size()) {
      throw Error(ErrorKind::Parse, path + ": row " + std::to_string(row) + " has " +
                                        std::to_string(cells.size()) + " cells, expected " +
                                        std::to_string(header.size()));
    }
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (c == label_idx) {
        const std::string key(cells[c]);
        auto [it, inserted] = encoding.try_emplace(key, static_cast<int>(encoding.size()));
        labels.push_back(it->second);
        continue;
      }
      const auto v = detail::parse_double(cells[c]);
      if (!v) {
        throw Error(ErrorKind::Parse, path + ": row " + std::to_string(row) + ", column '" +
                                          header[c] + "': not a finite number '" +
                                          std::string(cells[c]) + "'");
      }
      values.push_back(*v);
    }
  }
  if (encoding.size() < 2) {
    throw Error(ErrorKind::InvalidArgument, path + ": need at least two classes, found " +
                                                std::to_string(encoding.size()));
  }
  auto stem = path.substr(path.find_last_of('/') == std::string::npos ? 0 : path.find_last_of('/') + 1);
  if (const auto dot = stem.rfind('.'); dot != std::string::npos) stem.erase(dot);
  Dataset ds{stem, Matrix(row, d, std::move(values)), std::move(labels)};
  validate(ds);
  return ds;
}

/// Column-wise z-score (population sd); constant columns are only centered.
inline void standardize(Dataset& ds) {
  const std::size_t n = ds.size();
  for (std::size_t j = 0; j < ds.dims(); ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += ds.x(i, j);
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) var += (ds.x(i, j) - mean) * (ds.x(i, j) - mean);
    const double sd = std::sqrt(var / static_cast<double>(n));
    for (std::size_t i = 0; i < n; ++i) {
      ds.x(i, j) = sd > 0.0 ? (ds.x(i, j) - mean) / sd : ds.x(i, j) - mean;
    }
  }
}

struct SplitMasks {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
};

namespace detail {

// Hands out `total` slots one at a time to the class furthest below its
// proportional target, never exceeding capacity[c].
inline std::vector<std::size_t> proportional_allocation(const std::vector<std::size_t>& sizes,
                                                        std::vector<std::size_t> capacity,
                                                        std::vector<std::size_t> alloc,
                                                        std::size_t total) {
  std::size_t n = 0;
  for (auto s : sizes) n += s;
  std::size_t goal = total;
  for (auto a : alloc) goal += a;
  std::size_t given = 0;
  for (auto a : alloc) given += a;
  while (given < goal) {
    std::size_t best = sizes.size();
    double best_deficit = -1e300;
    for (std::size_t c = 0; c < sizes.size(); ++c) {
      if (alloc[c] >= capacity[c]) continue;
      const double target = static_cast<double>(goal) * static_cast<double>(sizes[c]) /
                            static_cast<double>(n);
      const double deficit = target - static_cast<double>(alloc[c]);
      if (deficit > best_deficit) {
        best_deficit = deficit;
        best = c;
      }
    }
    if (best == sizes.size()) break;
    ++alloc[best];
    ++given;
  }
  return alloc;
}

}  // namespace detail

/// Stratified random split. Train receives at least one node per class;
/// everything not in train or val is test.
inline SplitMasks split_masks(std::size_t n, std::size_t n_train, std::size_t n_val,
                              const std::vector<int>& labels, std::uint64_t seed) {
  if (labels.size() != n) throw Error(ErrorKind::DimensionMismatch, "labels length != n");
  int max_label = -1;
  for (int y : labels) max_label = std::max(max_label, y);
  const auto c = static_cast<std::size_t>(max_label + 1);
  if (n_train < c) {
    throw Error(ErrorKind::InvalidArgument, "n_train " + std::to_string(n_train) +
                                                " is below the class count " + std::to_string(c));
  }
  if (n_train + n_val >= n) {
    throw Error(ErrorKind::InvalidArgument,
                "n_train + n_val = " + std::to_string(n_train + n_val) +
                    " leaves no test nodes out of " + std::to_string(n));
  }

  std::vector<std::vector<std::size_t>> by_class(c);
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] < 0) throw Error(ErrorKind::InvalidArgument, "negative label");
    by_class[static_cast<std::size_t>(labels[i])].push_back(i);
  }
  std::vector<std::size_t> sizes(c);
  for (std::size_t k = 0; k < c; ++k) {
    if (by_class[k].empty()) {
      throw Error(ErrorKind::InvalidArgument, "class " + std::to_string(k) + " has no nodes");
    }
    sizes[k] = by_class[k].size();
  }

  Rng rng(seed);
  for (auto& members : by_class) {
    for (std::size_t i = members.size(); i > 1; --i) {
      std::swap(members[i - 1], members[rng.below(i)]);
    }
  }

  const auto train_alloc = detail::proportional_allocation(
      sizes, sizes, std::vector<std::size_t>(c, 1), n_train - c);
  std::size_t train_total = 0;
  for (auto a : train_alloc) train_total += a;
  if (train_total != n_train) throw Error(ErrorKind::InvalidArgument, "train count infeasible");

  std::vector<std::size_t> remaining(c);
  for (std::size_t k = 0; k < c; ++k) remaining[k] = sizes[k] - train_alloc[k];
  const auto val_alloc = detail::proportional_allocation(remaining, remaining,
                                                         std::vector<std::size_t>(c, 0), n_val);

  SplitMasks masks;
  for (std::size_t k = 0; k < c; ++k) {
    const auto& members = by_class[k];
    std::size_t pos = 0;
    for (; pos < train_alloc[k]; ++pos) masks.train.push_back(members[pos]);
    for (std::size_t v = 0; v < val_alloc[k]; ++v, ++pos) masks.val.push_back(members[pos]);
    for (; pos < members.size(); ++pos) masks.test.push_back(members[pos]);
  }
  std::sort(masks.train.begin(), masks.train.end());
  std::sort(masks.val.begin(), masks.val.end());
  std::sort(masks.test.begin(), masks.test.end());
  if (masks.test.empty()) throw Error(ErrorKind::InvalidArgument, "split leaves no test nodes");
  return masks;
}

}  // namespace rpgcn
