#pragma once

#include <optional>

#include "pkm/batch_norm.hpp"
#include "pkm/linear.hpp"
#include "pkm/matrix.hpp"
#include "pkm/rng.hpp"

namespace pkm {

/// Per-head query map q(x) = BN(W x + b), BN optional. The output dimension
/// must be even so the query can split into two sub-queries.
template <typename T>
struct QueryNetwork {
  Linear<T> linear;
  std::optional<BatchNorm<T>> bn;

  QueryNetwork() = default;
  QueryNetwork(int64_t d, int64_t dq, bool batch_norm) : linear(dq, d) {
    if (dq % 2 != 0)
      throw std::invalid_argument("QueryNetwork: dq must be even, got " + std::to_string(dq));
    if (batch_norm) bn.emplace(dq);
  }

  int64_t in_dim() const { return linear.in_dim(); }
  int64_t out_dim() const { return linear.out_dim(); }

  void init(Rng& rng) { linear.init(rng); }

  struct Cache {
    Matrix<T> pre_bn;  // (n, dq), linear output
    typename BatchNorm<T>::Cache bn_cache;
  };

  Matrix<T> forward(const Matrix<T>& x, Mode mode, Cache* cache) {
    Matrix<T> q(x.rows(), out_dim());
    if (bn) {
      Matrix<T> pre(x.rows(), out_dim());
      linear.forward(x, pre);
      bn->forward(pre, q, mode, cache ? &cache->bn_cache : nullptr);
      if (cache) cache->pre_bn = std::move(pre);
    } else {
      linear.forward(x, q);
    }
    return q;
  }

  /// Accumulates parameter grads; accumulates input gradient into dx.
  void backward(const Matrix<T>& x, const Cache& cache, const Matrix<T>& dq,
                Matrix<T>& dx) {
    if (bn) {
      Matrix<T> dpre(dq.rows(), out_dim());
      bn->backward(cache.bn_cache, dq, dpre);
      linear.backward(x, dpre, &dx);
    } else {
      linear.backward(x, dq, &dx);
    }
  }

  void zero_grads() {
    linear.zero_grads();
    if (bn) bn->zero_grads();
  }
};

}  // namespace pkm
