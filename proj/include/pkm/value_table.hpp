#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "pkm/matrix.hpp"
#include "pkm/rng.hpp"

namespace pkm {

/// Sparse per-row gradients for the value table. std::map keeps iteration
/// order deterministic, which the update path and the tests rely on.
template <typename T>
struct SparseRowGrads {
  std::map<int64_t, std::vector<T>> rows;

  void add(int64_t row, std::span<const T> grad) {
    auto it = rows.find(row);
    if (it == rows.end()) {
      rows.emplace(row, std::vector<T>(grad.begin(), grad.end()));
    } else {
      std::vector<T>& acc = it->second;
      for (size_t j = 0; j < grad.size(); ++j) acc[j] += grad[j];
    }
  }

  /// Scaled accumulate: grad += scale * vec.
  void add_scaled(int64_t row, std::span<const T> vec, T scale, int64_t dim) {
    auto it = rows.try_emplace(row, static_cast<size_t>(dim), T(0)).first;
    std::vector<T>& acc = it->second;
    for (size_t j = 0; j < vec.size(); ++j) acc[j] += scale * vec[j];
  }

  size_t touched() const { return rows.size(); }
  bool empty() const { return rows.empty(); }
  void clear() { rows.clear(); }
};

/// |K| rows of d-dimensional values shared by all heads, with per-row Adam
/// moments and step counts.
///
/// The Adam step is lazy: moments of rows that receive no gradient are left
/// untouched, with no decay catch-up. That deviates from dense Adam but is
/// deterministic and touches only the selected rows.
template <typename T>
class ValueTable {
 public:
  ValueTable() = default;
  ValueTable(int64_t rows, int64_t dim)
      : values_(rows, dim),
        m_(rows, dim),
        v_(rows, dim),
        step_(static_cast<size_t>(rows), 0) {}

  int64_t rows() const { return values_.rows(); }
  int64_t dim() const { return values_.cols(); }

  const Matrix<T>& values() const { return values_; }
  Matrix<T>& values_mut() { return values_; }
  const Matrix<T>& moments_m() const { return m_; }
  Matrix<T>& moments_m_mut() { return m_; }
  const Matrix<T>& moments_v() const { return v_; }
  Matrix<T>& moments_v_mut() { return v_; }
  const std::vector<int64_t>& steps() const { return step_; }
  std::vector<int64_t>& steps_mut() { return step_; }

  std::span<const T> row(int64_t i) const { return values_.row(i); }

  void init(Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(dim()));
    for (int64_t i = 0; i < values_.size(); ++i)
      values_.data()[i] = static_cast<T>(rng.uniform(-bound, bound));
  }

  /// Adam step applied only to the rows named in `grads`.
  void sparse_adam_step(const SparseRowGrads<T>& grads, double lr, double beta1,
                        double beta2, double eps) {
    const T b1 = static_cast<T>(beta1);
    const T b2 = static_cast<T>(beta2);
    for (const auto& [row, grad] : grads.rows) {
      if (row < 0 || row >= rows())
        throw std::invalid_argument("sparse_adam_step: row " + std::to_string(row) +
                                    " out of range");
      if (static_cast<int64_t>(grad.size()) != dim())
        throw std::invalid_argument("sparse_adam_step: gradient dim mismatch");
      int64_t& t = step_[static_cast<size_t>(row)];
      t += 1;
      const T corr1 = T(1) - static_cast<T>(std::pow(beta1, static_cast<double>(t)));
      const T corr2 = T(1) - static_cast<T>(std::pow(beta2, static_cast<double>(t)));
      T* mr = m_.row(row).data();
      T* vr = v_.row(row).data();
      T* val = values_.row(row).data();
      for (int64_t j = 0; j < dim(); ++j) {
        const T g = grad[static_cast<size_t>(j)];
        mr[j] = b1 * mr[j] + (T(1) - b1) * g;
        vr[j] = b2 * vr[j] + (T(1) - b2) * g * g;
        const T mhat = mr[j] / corr1;
        const T vhat = vr[j] / corr2;
        val[j] -= static_cast<T>(lr) * mhat / (std::sqrt(vhat) + static_cast<T>(eps));
      }
    }
  }

 private:
  Matrix<T> values_;
  Matrix<T> m_;
  Matrix<T> v_;
  std::vector<int64_t> step_;
};

}  // namespace pkm
