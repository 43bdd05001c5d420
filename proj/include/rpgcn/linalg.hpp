#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "rpgcn/error.hpp"

namespace rpgcn {

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
      throw Error(ErrorKind::DimensionMismatch,
                  "matrix data length " + std::to_string(data_.size()) + " != " +
                      std::to_string(rows_) + "x" + std::to_string(cols_));
    }
  }
  Matrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
      if (r.size() != cols_) throw Error(ErrorKind::DimensionMismatch, "ragged matrix literal");
      data_.insert(data_.end(), r.begin(), r.end());
    }
  }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const noexcept {
    return {data_.data() + r * cols_, cols_};
  }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

inline bool all_finite(const Matrix& m) {
  return std::all_of(m.values().begin(), m.values().end(),
                     [](double v) { return std::isfinite(v); });
}

inline Matrix transpose(const Matrix& m) {
  Matrix t(m.cols(), m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) t(j, i) = m(i, j);
  return t;
}

inline Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw Error(ErrorKind::DimensionMismatch,
                "matmul " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) + " * " +
                    std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  }
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto out_row = out.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      const auto b_row = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) out_row[j] += aik * b_row[j];
    }
  }
  return out;
}

/// aᵀ·b without materializing the transpose.
inline Matrix matmul_transpose_a(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) {
    throw Error(ErrorKind::DimensionMismatch, "matmul_transpose_a row counts differ");
  }
  Matrix out(a.cols(), b.cols());
  for (std::size_t k = 0; k < a.rows(); ++k) {
    const auto a_row = a.row(k);
    const auto b_row = b.row(k);
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double aki = a_row[i];
      if (aki == 0.0) continue;
      auto out_row = out.row(i);
      for (std::size_t j = 0; j < b.cols(); ++j) out_row[j] += aki * b_row[j];
    }
  }
  return out;
}

/// a·bᵀ without materializing the transpose.
inline Matrix matmul_transpose_b(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) {
    throw Error(ErrorKind::DimensionMismatch, "matmul_transpose_b column counts differ");
  }
  Matrix out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const auto a_row = a.row(i);
    for (std::size_t j = 0; j < b.rows(); ++j) {
      const auto b_row = b.row(j);
      out(i, j) = std::inner_product(a_row.begin(), a_row.end(), b_row.begin(), 0.0);
    }
  }
  return out;
}

/// Compressed sparse row matrix; only used as the left operand of products.
class SparseMatrix {
 public:
  struct Entry {
    std::size_t row;
    std::size_t col;
    double value;
  };

  SparseMatrix() = default;

  /// Entries may arrive in any order; duplicates are summed.
  SparseMatrix(std::size_t rows, std::size_t cols, std::vector<Entry> entries)
      : rows_(rows), cols_(cols), row_ptr_(rows + 1, 0) {
    std::sort(entries.begin(), entries.end(), [](const Entry& x, const Entry& y) {
      return std::tie(x.row, x.col) < std::tie(y.row, y.col);
    });
    for (std::size_t k = 0; k < entries.size(); ++k) {
      const auto& e = entries[k];
      if (e.row >= rows || e.col >= cols) {
        throw Error(ErrorKind::DimensionMismatch, "sparse entry out of range");
      }
      if (k > 0 && entries[k - 1].row == e.row && entries[k - 1].col == e.col) {
        values_.back() += e.value;
        continue;
      }
      col_idx_.push_back(e.col);
      values_.push_back(e.value);
      ++row_ptr_[e.row + 1];
    }
    std::partial_sum(row_ptr_.begin(), row_ptr_.end(), row_ptr_.begin());
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t nonzeros() const noexcept { return values_.size(); }

  /// Calls fn(col, value) for every stored entry of row r.
  template <typename Fn>
  void for_each_in_row(std::size_t r, Fn&& fn) const {
    for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) fn(col_idx_[k], values_[k]);
  }

  Matrix multiply(const Matrix& dense) const {
    if (cols_ != dense.rows()) {
      throw Error(ErrorKind::DimensionMismatch, "sparse multiply inner dimensions differ");
    }
    Matrix out(rows_, dense.cols());
    for (std::size_t i = 0; i < rows_; ++i) {
      auto out_row = out.row(i);
      for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
        const double v = values_[k];
        const auto d_row = dense.row(col_idx_[k]);
        for (std::size_t j = 0; j < dense.cols(); ++j) out_row[j] += v * d_row[j];
      }
    }
    return out;
  }

  Matrix to_dense() const {
    Matrix out(rows_, cols_);
    for (std::size_t i = 0; i < rows_; ++i)
      for_each_in_row(i, [&](std::size_t j, double v) { out(i, j) += v; });
    return out;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::size_t> row_ptr_;
  std::vector<std::size_t> col_idx_;
  std::vector<double> values_;
};

struct EigenDecomposition {
  std::vector<double> values;  // ascending
  Matrix vectors;              // column k pairs with values[k]
};

namespace detail {

// (x, y) <- (c·x − s·y, s·x + c·y) over two non-overlapping rows.
inline void rotate_pair(double* __restrict x, double* __restrict y, std::size_t n, double c, double s) {
  for (std::size_t k = 0; k < n; ++k) {
    const double xk = x[k];
    const double yk = y[k];
    x[k] = c * xk - s * yk;
    y[k] = s * xk + c * yk;
  }
}

}  // namespace detail

struct JacobiOptions {
  int max_sweeps = 100;
  double off_tolerance = 1e-12;
  double symmetry_tolerance = 1e-10;
};

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
///
/// The input is symmetrized as (M + Mᵀ)/2 after the symmetry check. Convergence
/// is declared once the off-diagonal Frobenius norm drops below
/// off_tolerance · max(1, ‖M‖_F).
inline EigenDecomposition sym_eig(const Matrix& m, const JacobiOptions& opts = {}) {
  if (m.rows() != m.cols()) {
    throw Error(ErrorKind::NotSquare,
                "sym_eig needs a square matrix, got " + std::to_string(m.rows()) + "x" +
                    std::to_string(m.cols()));
  }
  if (!all_finite(m)) throw Error(ErrorKind::InvalidArgument, "sym_eig input is not finite");
  const std::size_t n = m.rows();
  Matrix a(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (std::abs(m(i, j) - m(j, i)) > opts.symmetry_tolerance) {
        throw Error(ErrorKind::NotSymmetric, "entry (" + std::to_string(i) + "," +
                                                 std::to_string(j) + ") differs from its mirror");
      }
      a(i, j) = 0.5 * (m(i, j) + m(j, i));
    }
  }

  // Rows of vt are the eigenvectors; keeps rotation updates contiguous.
  Matrix vt = Matrix::identity(n);
  double frob = 0.0;
  for (double v : a.values()) frob += v * v;
  const double tol = opts.off_tolerance * std::max(1.0, std::sqrt(frob));

  auto off_norm = [&] {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) s += 2.0 * a(i, j) * a(i, j);
    return std::sqrt(s);
  };

  // Threshold strategy: early sweeps skip rotations that are small next to
  // the mean off-diagonal magnitude; later sweeps zero entries that can no
  // longer change either diagonal element.
  bool converged = false;
  for (int sweep = 0; sweep <= opts.max_sweeps; ++sweep) {
    const double off = off_norm();
    if (off < tol) {
      converged = true;
      break;
    }
    if (sweep == opts.max_sweeps) break;
    const double skip_below = sweep < 3 ? 0.2 * off / static_cast<double>(n * n) : 0.0;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double app = a(p, p);
        const double aqq = a(q, q);
        const double g = 100.0 * std::abs(apq);
        if (sweep > 3 && std::abs(app) + g == std::abs(app) && std::abs(aqq) + g == std::abs(aqq)) {
          a(p, q) = 0.0;
          a(q, p) = 0.0;
          continue;
        }
        if (std::abs(apq) < skip_below) continue;
        const double theta = (aqq - app) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;

        // Rows p and q in one contiguous pass, then mirror into the columns.
        detail::rotate_pair(&a(p, 0), &a(q, 0), n, c, s);
        a(p, p) = app - t * apq;
        a(q, q) = aqq + t * apq;
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          if (k == p || k == q) continue;
          a(k, p) = a(p, k);
          a(k, q) = a(q, k);
        }
        detail::rotate_pair(&vt(p, 0), &vt(q, 0), n, c, s);
      }
    }
  }
  if (!converged) {
    throw Error(ErrorKind::NoConvergence,
                "Jacobi did not converge within " + std::to_string(opts.max_sweeps) + " sweeps");
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return a(x, x) < a(y, y); });

  EigenDecomposition out{std::vector<double>(n), Matrix(n, n)};
  for (std::size_t k = 0; k < n; ++k) {
    out.values[k] = a(order[k], order[k]);
    const auto v = vt.row(order[k]);
    for (std::size_t i = 0; i < n; ++i) out.vectors(i, k) = v[i];
  }
  return out;
}

}  // namespace rpgcn
