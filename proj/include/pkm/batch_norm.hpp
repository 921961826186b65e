#pragma once

#include <cmath>
#include <vector>

#include "pkm/errors.hpp"
#include "pkm/matrix.hpp"

namespace pkm {

enum class Mode { Train, Eval };

/// Per-feature batch normalization over the rows of a (n, dim) batch.
///
/// Train mode normalizes with biased batch statistics and folds unbiased
/// batch variance into the running estimates with the usual
/// running = (1 - momentum) * running + momentum * batch rule.
/// Eval mode uses the running estimates and never mutates state.
template <typename T>
struct BatchNorm {
  Matrix<T> gamma;  // (1, dim)
  Matrix<T> beta;
  Matrix<T> dgamma;
  Matrix<T> dbeta;
  Matrix<T> running_mean;
  Matrix<T> running_var;
  double momentum = 0.1;
  double epsilon = 1e-5;

  BatchNorm() = default;
  explicit BatchNorm(int64_t dim)
      : gamma(1, dim),
        beta(1, dim),
        dgamma(1, dim),
        dbeta(1, dim),
        running_mean(1, dim),
        running_var(1, dim) {
    gamma.fill(T(1));
    running_var.fill(T(1));
  }

  int64_t dim() const { return gamma.cols(); }

  struct Cache {
    Matrix<T> xhat;          // (n, dim)
    std::vector<T> inv_std;  // (dim), batch stats
    bool train = false;
  };

  void forward(const Matrix<T>& x, Matrix<T>& y, Mode mode, Cache* cache) {
    const int64_t n = x.rows();
    const int64_t d = dim();
    if (x.cols() != d) throw std::invalid_argument("BatchNorm: feature dim mismatch");
    if (mode == Mode::Train && n < 2)
      throw DegenerateBatchError(
          "BatchNorm: train mode needs a batch of at least 2 rows, got " +
          std::to_string(n));

    std::vector<T> mean(static_cast<size_t>(d), T(0));
    std::vector<T> var(static_cast<size_t>(d), T(0));
    if (mode == Mode::Train) {
      for (int64_t t = 0; t < n; ++t) {
        const T* xr = x.row(t).data();
        for (int64_t j = 0; j < d; ++j) mean[static_cast<size_t>(j)] += xr[j];
      }
      for (int64_t j = 0; j < d; ++j) mean[static_cast<size_t>(j)] /= static_cast<T>(n);
      for (int64_t t = 0; t < n; ++t) {
        const T* xr = x.row(t).data();
        for (int64_t j = 0; j < d; ++j) {
          const T c = xr[j] - mean[static_cast<size_t>(j)];
          var[static_cast<size_t>(j)] += c * c;
        }
      }
      for (int64_t j = 0; j < d; ++j) var[static_cast<size_t>(j)] /= static_cast<T>(n);

      // Unbiased variance goes into the running estimate.
      const T mom = static_cast<T>(momentum);
      const T unbias = static_cast<T>(n) / static_cast<T>(n - 1);
      for (int64_t j = 0; j < d; ++j) {
        running_mean(0, j) = (T(1) - mom) * running_mean(0, j) + mom * mean[static_cast<size_t>(j)];
        running_var(0, j) =
            (T(1) - mom) * running_var(0, j) + mom * unbias * var[static_cast<size_t>(j)];
      }
    } else {
      for (int64_t j = 0; j < d; ++j) {
        mean[static_cast<size_t>(j)] = running_mean(0, j);
        var[static_cast<size_t>(j)] = running_var(0, j);
      }
    }

    std::vector<T> inv_std(static_cast<size_t>(d));
    for (int64_t j = 0; j < d; ++j)
      inv_std[static_cast<size_t>(j)] =
          T(1) / std::sqrt(var[static_cast<size_t>(j)] + static_cast<T>(epsilon));

    if (cache) cache->xhat = Matrix<T>(n, d);
    for (int64_t t = 0; t < n; ++t) {
      const T* xr = x.row(t).data();
      T* yr = y.row(t).data();
      for (int64_t j = 0; j < d; ++j) {
        const size_t sj = static_cast<size_t>(j);
        const T xh = (xr[j] - mean[sj]) * inv_std[sj];
        yr[j] = gamma(0, j) * xh + beta(0, j);
        if (cache) cache->xhat(t, j) = xh;
      }
    }
    if (cache) {
      cache->inv_std = std::move(inv_std);
      cache->train = (mode == Mode::Train);
    }
  }

  /// Train-mode backward through the batch statistics. Accumulates
  /// dgamma/dbeta, accumulates the input gradient into dx.
  void backward(const Cache& cache, const Matrix<T>& dy, Matrix<T>& dx) {
    if (!cache.train)
      throw std::logic_error("BatchNorm::backward: cache was not built in train mode");
    const int64_t n = dy.rows();
    const int64_t d = dim();

    std::vector<T> sum_dxhat(static_cast<size_t>(d), T(0));
    std::vector<T> sum_dxhat_xhat(static_cast<size_t>(d), T(0));
    for (int64_t t = 0; t < n; ++t) {
      const T* dyr = dy.row(t).data();
      const T* xhr = cache.xhat.row(t).data();
      for (int64_t j = 0; j < d; ++j) {
        const size_t sj = static_cast<size_t>(j);
        const T dxh = dyr[j] * gamma(0, j);
        sum_dxhat[sj] += dxh;
        sum_dxhat_xhat[sj] += dxh * xhr[j];
        dgamma(0, j) += dyr[j] * xhr[j];
        dbeta(0, j) += dyr[j];
      }
    }
    const T inv_n = T(1) / static_cast<T>(n);
    for (int64_t t = 0; t < n; ++t) {
      const T* dyr = dy.row(t).data();
      const T* xhr = cache.xhat.row(t).data();
      T* dxr = dx.row(t).data();
      for (int64_t j = 0; j < d; ++j) {
        const size_t sj = static_cast<size_t>(j);
        const T dxh = dyr[j] * gamma(0, j);
        dxr[j] += cache.inv_std[sj] *
                  (dxh - inv_n * (sum_dxhat[sj] + xhr[j] * sum_dxhat_xhat[sj]));
      }
    }
  }

  void zero_grads() {
    dgamma.zero();
    dbeta.zero();
  }
};

}  // namespace pkm
