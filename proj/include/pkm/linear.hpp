#pragma once

#include "pkm/matrix.hpp"
#include "pkm/rng.hpp"

namespace pkm {

/// Affine map y = x W^T + b with gradient buffers alongside the parameters.
template <typename T>
struct Linear {
  Matrix<T> weight;   // (out, in)
  Matrix<T> bias;     // (1, out)
  Matrix<T> dweight;
  Matrix<T> dbias;

  Linear() = default;
  Linear(int64_t out_dim, int64_t in_dim)
      : weight(out_dim, in_dim),
        bias(1, out_dim),
        dweight(out_dim, in_dim),
        dbias(1, out_dim) {}

  int64_t in_dim() const { return weight.cols(); }
  int64_t out_dim() const { return weight.rows(); }

  /// Fan-in scaled uniform init, U(-1/sqrt(in), 1/sqrt(in)) for both weight
  /// and bias.
  void init(Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in_dim()));
    init_uniform(rng, bound);
  }

  void init_uniform(Rng& rng, double bound) {
    for (int64_t i = 0; i < weight.size(); ++i)
      weight.data()[i] = static_cast<T>(rng.uniform(-bound, bound));
    for (int64_t i = 0; i < bias.size(); ++i)
      bias.data()[i] = static_cast<T>(rng.uniform(-bound, bound));
  }

  void forward(const Matrix<T>& x, Matrix<T>& y) const {
    gemm_nt(x, weight, y);
    for (int64_t t = 0; t < y.rows(); ++t) {
      T* yr = y.row(t).data();
      const T* b = bias.data();
      for (int64_t j = 0; j < y.cols(); ++j) yr[j] += b[j];
    }
  }

  /// Accumulates dweight/dbias; if dx is non-null, accumulates x-gradient
  /// into it (caller zeroes it at the start of the backward pass).
  void backward(const Matrix<T>& x, const Matrix<T>& dy, Matrix<T>* dx) {
    gemm_tn_add(dy, x, dweight);
    for (int64_t t = 0; t < dy.rows(); ++t) {
      const T* dyr = dy.row(t).data();
      T* db = dbias.data();
      for (int64_t j = 0; j < dy.cols(); ++j) db[j] += dyr[j];
    }
    if (dx) {
      // dx += dy * W
      for (int64_t t = 0; t < dy.rows(); ++t) {
        const T* dyr = dy.row(t).data();
        T* dxr = dx->row(t).data();
        for (int64_t o = 0; o < weight.rows(); ++o) {
          const T g = dyr[o];
          const T* wr = weight.row(o).data();
          for (int64_t j = 0; j < weight.cols(); ++j) dxr[j] += g * wr[j];
        }
      }
    }
  }

  void zero_grads() {
    dweight.zero();
    dbias.zero();
  }
};

}  // namespace pkm
