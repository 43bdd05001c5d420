#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "rpgcn/error.hpp"
#include "rpgcn/graph.hpp"
#include "rpgcn/linalg.hpp"
#include "rpgcn/random.hpp"

namespace rpgcn {

/// Â = D̃^{-1/2} (A + I) D̃^{-1/2} with D̃ᵢᵢ = 1 + Σⱼ Aᵢⱼ, stored sparse.
struct NormalizedAdjacency {
  SparseMatrix matrix;

  std::size_t size() const noexcept { return matrix.rows(); }
  Matrix to_dense() const { return matrix.to_dense(); }
};

inline NormalizedAdjacency normalize_adjacency(const WeightedGraph& g) {
  const std::size_t n = g.size();
  auto deg = g.degrees();
  std::vector<double> inv_sqrt(n);
  for (std::size_t i = 0; i < n; ++i) inv_sqrt[i] = 1.0 / std::sqrt(1.0 + deg[i]);
  std::vector<SparseMatrix::Entry> entries;
  entries.reserve(n + 2 * g.edge_count());
  for (std::size_t i = 0; i < n; ++i) entries.push_back({i, i, inv_sqrt[i] * inv_sqrt[i]});
  for (const auto& [e, w] : g.edges()) {
    const double v = w * inv_sqrt[e.first] * inv_sqrt[e.second];
    entries.push_back({e.first, e.second, v});
    entries.push_back({e.second, e.first, v});
  }
  return {SparseMatrix(n, n, std::move(entries))};
}

struct GcnHyperparams {
  std::size_t hidden = 16;
  double learning_rate = 0.01;
  double weight_decay = 5e-4;
  std::size_t max_epochs = 200;
  std::size_t patience = 20;
  double dropout = 0.0;  // applied to hidden activations during training only
  std::uint64_t seed = 0;
};

struct GcnModel {
  Matrix w0;  // d×h
  Matrix w1;  // h×c
  GcnHyperparams params;
};

/// Glorot-uniform initialization of both layers.
inline GcnModel init_model(std::size_t features, std::size_t classes, const GcnHyperparams& hp) {
  if (features == 0 || classes == 0 || hp.hidden == 0) {
    throw Error(ErrorKind::InvalidArgument, "GCN layer sizes must be positive");
  }
  Rng rng(derive_seed(hp.seed, 0x676c6f726f74ULL));
  auto glorot = [&](std::size_t fan_in, std::size_t fan_out) {
    Matrix w(fan_in, fan_out);
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (double& v : w.values()) v = rng.uniform(-limit, limit);
    return w;
  };
  GcnModel model{glorot(features, hp.hidden), glorot(hp.hidden, classes), hp};
  return model;
}

struct ForwardResult {
  Matrix logits;  // n×c, before softmax
  Matrix hidden;  // n×h, after ReLU
};

namespace detail {

struct ForwardCache {
  Matrix pre_activation;  // (ÂX)W0
  Matrix hidden;          // ReLU(pre) ⊙ dropout mask
  Matrix logits;
};

// `propagated_x` is ÂX, which is fixed across epochs.
inline ForwardCache forward_cached(const GcnModel& m, const Matrix& propagated_x,
                                   const NormalizedAdjacency& a_hat,
                                   const std::vector<double>* dropout_scale = nullptr) {
  ForwardCache c;
  c.pre_activation = matmul(propagated_x, m.w0);
  c.hidden = c.pre_activation;
  auto h = c.hidden.values();
  for (std::size_t k = 0; k < h.size(); ++k) {
    h[k] = std::max(0.0, h[k]);
    if (dropout_scale) h[k] *= (*dropout_scale)[k];
  }
  c.logits = a_hat.matrix.multiply(matmul(c.hidden, m.w1));
  return c;
}

inline void check_shapes(const GcnModel& m, const Matrix& x, const NormalizedAdjacency& a_hat) {
  if (x.rows() != a_hat.size()) {
    throw Error(ErrorKind::DimensionMismatch, "feature rows " + std::to_string(x.rows()) +
                                                  " != adjacency size " + std::to_string(a_hat.size()));
  }
  if (x.cols() != m.w0.rows() || m.w0.cols() != m.w1.rows()) {
    throw Error(ErrorKind::DimensionMismatch, "model weights do not match feature width");
  }
}

inline std::size_t argmax_row(std::span<const double> row) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < row.size(); ++k)
    if (row[k] > row[best]) best = k;
  return best;
}

}  // namespace detail

/// hidden = ReLU(Â X W0), logits = Â hidden W1.
inline ForwardResult forward(const GcnModel& m, const Matrix& x, const NormalizedAdjacency& a_hat) {
  detail::check_shapes(m, x, a_hat);
  auto c = detail::forward_cached(m, a_hat.matrix.multiply(x), a_hat);
  return {std::move(c.logits), std::move(c.hidden)};
}

/// Mean over masked nodes of -log softmax(logits)[i, yᵢ].
inline double masked_cross_entropy(const Matrix& logits, const std::vector<int>& labels,
                                   std::span<const std::size_t> mask) {
  if (mask.empty()) throw Error(ErrorKind::InvalidArgument, "cross-entropy mask is empty");
  double total = 0.0;
  for (auto i : mask) {
    const auto row = logits.row(i);
    const double mx = *std::max_element(row.begin(), row.end());
    double sum = 0.0;
    for (double v : row) sum += std::exp(v - mx);
    total += mx + std::log(sum) - row[static_cast<std::size_t>(labels[i])];
  }
  return total / static_cast<double>(mask.size());
}

/// Fraction of masked nodes whose arg-max logit (lowest index on ties) is the label.
inline double accuracy(const Matrix& logits, const std::vector<int>& labels,
                       std::span<const std::size_t> mask) {
  if (mask.empty()) throw Error(ErrorKind::InvalidArgument, "accuracy mask is empty");
  std::size_t hits = 0;
  for (auto i : mask) {
    if (static_cast<int>(detail::argmax_row(logits.row(i))) == labels[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(mask.size());
}

inline double evaluate(const GcnModel& m, const Matrix& x, const NormalizedAdjacency& a_hat,
                       const std::vector<int>& labels, std::span<const std::size_t> mask) {
  return accuracy(forward(m, x, a_hat).logits, labels, mask);
}

/// Training objective: masked cross-entropy + (λ/2)(‖W0‖² + ‖W1‖²).
inline double objective(const GcnModel& m, const Matrix& x, const NormalizedAdjacency& a_hat,
                        const std::vector<int>& labels, std::span<const std::size_t> mask) {
  const auto logits = forward(m, x, a_hat).logits;
  double reg = 0.0;
  for (double v : m.w0.values()) reg += v * v;
  for (double v : m.w1.values()) reg += v * v;
  return masked_cross_entropy(logits, labels, mask) + 0.5 * m.params.weight_decay * reg;
}

struct Gradients {
  Matrix w0;
  Matrix w1;
  double loss = 0.0;  // cross-entropy part only
};

namespace detail {

inline Gradients backward(const GcnModel& m, const Matrix& propagated_x,
                          const NormalizedAdjacency& a_hat, const std::vector<int>& labels,
                          std::span<const std::size_t> mask,
                          const std::vector<double>* dropout_scale = nullptr) {
  if (mask.empty()) throw Error(ErrorKind::InvalidArgument, "gradient mask is empty");
  const auto c = forward_cached(m, propagated_x, a_hat, dropout_scale);
  const double inv_m = 1.0 / static_cast<double>(mask.size());

  Gradients g;
  g.loss = masked_cross_entropy(c.logits, labels, mask);
  Matrix d_logits(c.logits.rows(), c.logits.cols());
  for (auto i : mask) {
    const auto row = c.logits.row(i);
    const double mx = *std::max_element(row.begin(), row.end());
    double sum = 0.0;
    for (double v : row) sum += std::exp(v - mx);
    auto d = d_logits.row(i);
    for (std::size_t k = 0; k < row.size(); ++k) d[k] = std::exp(row[k] - mx) / sum * inv_m;
    d[static_cast<std::size_t>(labels[i])] -= inv_m;
  }
  // Â is symmetric, so Âᵀ·G = Â·G.
  const Matrix d_support = a_hat.matrix.multiply(d_logits);
  g.w1 = matmul_transpose_a(c.hidden, d_support);
  Matrix d_pre = matmul_transpose_b(d_support, m.w1);
  const auto pre = c.pre_activation.values();
  auto dp = d_pre.values();
  for (std::size_t k = 0; k < dp.size(); ++k) {
    if (pre[k] <= 0.0) dp[k] = 0.0;
    else if (dropout_scale) dp[k] *= (*dropout_scale)[k];
  }
  g.w0 = matmul_transpose_a(propagated_x, d_pre);

  const double lambda = m.params.weight_decay;
  auto add_decay = [lambda](Matrix& grad, const Matrix& w) {
    auto gv = grad.values();
    const auto wv = w.values();
    for (std::size_t k = 0; k < gv.size(); ++k) gv[k] += lambda * wv[k];
  };
  add_decay(g.w0, m.w0);
  add_decay(g.w1, m.w1);
  return g;
}

}  // namespace detail

/// Analytic gradients of objective() with respect to W0 and W1.
inline Gradients gradients(const GcnModel& m, const Matrix& x, const NormalizedAdjacency& a_hat,
                           const std::vector<int>& labels, std::span<const std::size_t> mask) {
  detail::check_shapes(m, x, a_hat);
  return detail::backward(m, a_hat.matrix.multiply(x), a_hat, labels, mask);
}

struct TrainReport {
  std::vector<double> train_loss;
  std::vector<double> val_loss;
  std::vector<double> val_accuracy;
  std::size_t epochs_run = 0;
  std::size_t best_epoch = 0;  // 1-based; 0 when no validation set or no epochs
  double test_accuracy = std::numeric_limits<double>::quiet_NaN();
};

struct TrainResult {
  GcnModel model;
  TrainReport report;
};

struct TrainData {
  const Matrix& x;
  const std::vector<int>& labels;
  std::span<const std::size_t> train;
  std::span<const std::size_t> val;
  std::span<const std::size_t> test;
};

/// Full-batch Adam with early stopping on validation loss. The weights with
/// the best validation loss are restored before returning.
inline TrainResult train(const TrainData& data, const NormalizedAdjacency& a_hat,
                         const GcnHyperparams& hp) {
  if (data.train.empty()) throw Error(ErrorKind::InvalidArgument, "training mask is empty");
  int max_label = 0;
  for (int y : data.labels) max_label = std::max(max_label, y);
  GcnModel model = init_model(data.x.cols(), static_cast<std::size_t>(max_label) + 1, hp);
  detail::check_shapes(model, data.x, a_hat);
  const Matrix propagated_x = a_hat.matrix.multiply(data.x);

  constexpr double beta1 = 0.9;
  constexpr double beta2 = 0.999;
  constexpr double eps = 1e-8;
  Matrix m0(model.w0.rows(), model.w0.cols()), v0 = m0;
  Matrix m1(model.w1.rows(), model.w1.cols()), v1 = m1;
  auto adam = [&](Matrix& w, const Matrix& grad, Matrix& m, Matrix& v, double bc1, double bc2) {
    auto wv = w.values();
    const auto gv = grad.values();
    auto mv = m.values();
    auto vv = v.values();
    for (std::size_t k = 0; k < wv.size(); ++k) {
      mv[k] = beta1 * mv[k] + (1.0 - beta1) * gv[k];
      vv[k] = beta2 * vv[k] + (1.0 - beta2) * gv[k] * gv[k];
      wv[k] -= hp.learning_rate * (mv[k] / bc1) / (std::sqrt(vv[k] / bc2) + eps);
    }
  };

  Rng dropout_rng(derive_seed(hp.seed, 0x64726f70ULL));
  std::vector<double> dropout_scale;

  TrainReport report;
  GcnModel best = model;
  double best_val = std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;
  for (std::size_t epoch = 1; epoch <= hp.max_epochs; ++epoch) {
    const std::vector<double>* scale = nullptr;
    if (hp.dropout > 0.0) {
      dropout_scale.assign(data.x.rows() * hp.hidden, 0.0);
      const double keep = 1.0 - hp.dropout;
      for (double& s : dropout_scale) s = dropout_rng.uniform() < keep ? 1.0 / keep : 0.0;
      scale = &dropout_scale;
    }
    const auto grads = detail::backward(model, propagated_x, a_hat, data.labels, data.train, scale);
    if (!std::isfinite(grads.loss)) {
      throw Error(ErrorKind::NumericalFailure, "non-finite training loss at epoch " + std::to_string(epoch));
    }
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(epoch));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(epoch));
    adam(model.w0, grads.w0, m0, v0, bc1, bc2);
    adam(model.w1, grads.w1, m1, v1, bc1, bc2);
    if (!all_finite(model.w0) || !all_finite(model.w1)) {
      throw Error(ErrorKind::NumericalFailure, "non-finite weights at epoch " + std::to_string(epoch));
    }
    report.train_loss.push_back(grads.loss);
    report.epochs_run = epoch;

    if (data.val.empty()) continue;
    const auto logits = detail::forward_cached(model, propagated_x, a_hat).logits;
    const double val_loss = masked_cross_entropy(logits, data.labels, data.val);
    if (!std::isfinite(val_loss)) {
      throw Error(ErrorKind::NumericalFailure, "non-finite validation loss at epoch " + std::to_string(epoch));
    }
    report.val_loss.push_back(val_loss);
    report.val_accuracy.push_back(accuracy(logits, data.labels, data.val));
    if (val_loss < best_val) {
      best_val = val_loss;
      best = model;
      report.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= hp.patience) {
      break;
    }
  }
  if (!data.val.empty() && report.best_epoch > 0) model = best;
  if (!data.test.empty()) {
    report.test_accuracy =
        accuracy(detail::forward_cached(model, propagated_x, a_hat).logits, data.labels, data.test);
  }
  return {std::move(model), std::move(report)};
}

// ---------------------------------------------------------------------------
// Checkpoint: "rpgcn-gcn 1", then for each layer "<name> <rows> <cols>"
// followed by one line of shortest round-trip decimals per row.

inline void write_model(std::ostream& out, const GcnModel& m) {
  out << "rpgcn-gcn 1\n";
  auto layer = [&](const char* name, const Matrix& w) {
    out << name << ' ' << w.rows() << ' ' << w.cols() << '\n';
    for (std::size_t i = 0; i < w.rows(); ++i) {
      for (std::size_t j = 0; j < w.cols(); ++j) out << (j ? " " : "") << format_double(w(i, j));
      out << '\n';
    }
  };
  layer("w0", m.w0);
  layer("w1", m.w1);
}

inline GcnModel read_model(std::istream& in) {
  std::string magic;
  int version = 0;
  if (!(in >> magic >> version) || magic != "rpgcn-gcn" || version != 1) {
    throw Error(ErrorKind::Parse, "not an rpgcn-gcn v1 checkpoint");
  }
  auto layer = [&](const char* expected) {
    std::string name;
    std::size_t rows = 0;
    std::size_t cols = 0;
    if (!(in >> name >> rows >> cols) || name != expected) {
      throw Error(ErrorKind::Parse, std::string("missing layer ") + expected);
    }
    std::vector<double> values(rows * cols);
    for (double& v : values) {
      std::string token;
      if (!(in >> token)) throw Error(ErrorKind::Parse, std::string("truncated layer ") + expected);
      const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
      if (ec != std::errc{} || ptr != token.data() + token.size()) {
        throw Error(ErrorKind::Parse, "bad weight '" + token + "'");
      }
    }
    return Matrix(rows, cols, std::move(values));
  };
  GcnModel m;
  m.w0 = layer("w0");
  m.w1 = layer("w1");
  if (m.w0.cols() != m.w1.rows()) throw Error(ErrorKind::Parse, "layer shapes disagree");
  m.params.hidden = m.w0.cols();
  return m;
}

}  // namespace rpgcn
