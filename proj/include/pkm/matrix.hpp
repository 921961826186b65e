#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace pkm {

/// Dense row-major matrix. Vectors are 1-row or 1-column matrices or spans,
/// whichever the call site finds natural.
template <typename T>
class Matrix {
 public:
  Matrix() = default;
  Matrix(int64_t rows, int64_t cols)
      : rows_(rows), cols_(cols), data_(static_cast<size_t>(rows * cols), T(0)) {
    if (rows < 0 || cols < 0) throw std::invalid_argument("Matrix: negative shape");
  }
  Matrix(int64_t rows, int64_t cols, std::vector<T> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (static_cast<int64_t>(data_.size()) != rows * cols)
      throw std::invalid_argument("Matrix: data size does not match shape");
  }

  int64_t rows() const { return rows_; }
  int64_t cols() const { return cols_; }
  int64_t size() const { return rows_ * cols_; }
  bool empty() const { return data_.empty(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }

  T& operator()(int64_t i, int64_t j) { return data_[static_cast<size_t>(i * cols_ + j)]; }
  const T& operator()(int64_t i, int64_t j) const {
    return data_[static_cast<size_t>(i * cols_ + j)];
  }

  std::span<T> row(int64_t i) { return {data_.data() + i * cols_, static_cast<size_t>(cols_)}; }
  std::span<const T> row(int64_t i) const {
    return {data_.data() + i * cols_, static_cast<size_t>(cols_)};
  }

  std::span<T> flat() { return {data_.data(), data_.size()}; }
  std::span<const T> flat() const { return {data_.data(), data_.size()}; }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }
  void zero() { fill(T(0)); }

  bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

  bool all_finite() const {
    for (const T& v : data_)
      if (!std::isfinite(static_cast<double>(v))) return false;
    return true;
  }

  bool operator==(const Matrix& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_ && data_ == o.data_;
  }

 private:
  int64_t rows_ = 0;
  int64_t cols_ = 0;
  std::vector<T> data_;
};

/// Sequential dot product; per-element accumulation runs in index order.
/// Every score in the library is produced by this order, so two routes to
/// the same score agree bit for bit.
template <typename T>
inline T dot(std::span<const T> a, std::span<const T> b) {
  T acc = T(0);
  for (size_t f = 0; f < a.size(); ++f) acc += a[f] * b[f];
  return acc;
}

template <typename T>
inline Matrix<T> transpose(const Matrix<T>& a) {
  Matrix<T> t(a.cols(), a.rows());
  for (int64_t i = 0; i < a.rows(); ++i)
    for (int64_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

/// C = A * B^T. A is (n, k), B is (m, k). The contraction over k runs in
/// ascending order per output element (same order as dot()).
template <typename T>
inline void gemm_nt(const Matrix<T>& a, const Matrix<T>& b, Matrix<T>& c) {
  if (a.cols() != b.cols() || c.rows() != a.rows() || c.cols() != b.rows())
    throw std::invalid_argument("gemm_nt: shape mismatch");
  Matrix<T> bt = transpose(b);  // (k, m): makes the inner loop contiguous
  c.zero();
  for (int64_t i = 0; i < a.rows(); ++i) {
    const T* arow = a.row(i).data();
    T* crow = c.row(i).data();
    for (int64_t f = 0; f < a.cols(); ++f) {
      const T av = arow[f];
      const T* btrow = bt.row(f).data();
      for (int64_t j = 0; j < c.cols(); ++j) crow[j] += av * btrow[j];
    }
  }
}

/// C = A * B. A is (n, k), B is (k, m).
template <typename T>
inline void gemm_nn(const Matrix<T>& a, const Matrix<T>& b, Matrix<T>& c) {
  if (a.cols() != b.rows() || c.rows() != a.rows() || c.cols() != b.cols())
    throw std::invalid_argument("gemm_nn: shape mismatch");
  c.zero();
  for (int64_t i = 0; i < a.rows(); ++i) {
    const T* arow = a.row(i).data();
    T* crow = c.row(i).data();
    for (int64_t f = 0; f < a.cols(); ++f) {
      const T av = arow[f];
      const T* brow = b.row(f).data();
      for (int64_t j = 0; j < c.cols(); ++j) crow[j] += av * brow[j];
    }
  }
}

/// C += A^T * B. A is (n, r), B is (n, c), C is (r, c). Accumulates, since
/// this is the shape of weight-gradient updates.
template <typename T>
inline void gemm_tn_add(const Matrix<T>& a, const Matrix<T>& b, Matrix<T>& c) {
  if (a.rows() != b.rows() || c.rows() != a.cols() || c.cols() != b.cols())
    throw std::invalid_argument("gemm_tn_add: shape mismatch");
  for (int64_t t = 0; t < a.rows(); ++t) {
    const T* arow = a.row(t).data();
    const T* brow = b.row(t).data();
    for (int64_t r = 0; r < c.rows(); ++r) {
      const T av = arow[r];
      T* crow = c.row(r).data();
      for (int64_t j = 0; j < c.cols(); ++j) crow[j] += av * brow[j];
    }
  }
}

template <typename T>
inline void add_inplace(Matrix<T>& a, const Matrix<T>& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("add_inplace: shape mismatch");
  T* pa = a.data();
  const T* pb = b.data();
  for (int64_t i = 0; i < a.size(); ++i) pa[i] += pb[i];
}

template <typename T>
inline void scale_inplace(Matrix<T>& a, T s) {
  T* pa = a.data();
  for (int64_t i = 0; i < a.size(); ++i) pa[i] *= s;
}

}  // namespace pkm
