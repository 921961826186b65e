#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "pkm/matrix.hpp"
#include "pkm/transformer.hpp"
#include "pkm/value_table.hpp"

namespace pkm {

/// Inverse-square-root schedule with linear warmup: the learning rate ramps
/// to `base` over `warmup` steps, then decays as sqrt(warmup/step).
inline double warmup_inv_sqrt_lr(double base, int64_t step, int64_t warmup) {
  if (step < 1) step = 1;
  if (warmup < 1) warmup = 1;
  const double s = static_cast<double>(step);
  const double w = static_cast<double>(warmup);
  return base * std::min(s / w, std::sqrt(w / s));
}

/// Dense Adam over a parameter registry. Slots are aligned with registry
/// order, so the registry must be stable across calls (it is: the model
/// builds it in a fixed order).
template <typename T>
class DenseAdam {
 public:
  double beta1 = 0.9;
  double beta2 = 0.98;
  double eps = 1e-8;

  void attach(const std::vector<ParamRef<T>>& params) {
    m_.clear();
    v_.clear();
    for (const auto& p : params) {
      m_.emplace_back(p.value->rows(), p.value->cols());
      v_.emplace_back(p.value->rows(), p.value->cols());
    }
  }

  bool attached() const { return !m_.empty(); }
  int64_t step_count() const { return step_; }

  void step(const std::vector<ParamRef<T>>& params, double lr) {
    if (params.size() != m_.size())
      throw std::invalid_argument("DenseAdam::step: registry size changed");
    step_ += 1;
    const T b1 = static_cast<T>(beta1);
    const T b2 = static_cast<T>(beta2);
    const T corr1 = T(1) - static_cast<T>(std::pow(beta1, static_cast<double>(step_)));
    const T corr2 = T(1) - static_cast<T>(std::pow(beta2, static_cast<double>(step_)));
    for (size_t i = 0; i < params.size(); ++i) {
      T* val = params[i].value->data();
      const T* grad = params[i].grad->data();
      T* m = m_[i].data();
      T* v = v_[i].data();
      const int64_t size = params[i].value->size();
      for (int64_t j = 0; j < size; ++j) {
        const T g = grad[j];
        m[j] = b1 * m[j] + (T(1) - b1) * g;
        v[j] = b2 * v[j] + (T(1) - b2) * g * g;
        const T mhat = m[j] / corr1;
        const T vhat = v[j] / corr2;
        val[j] -= static_cast<T>(lr) * mhat / (std::sqrt(vhat) + static_cast<T>(eps));
      }
    }
  }

  std::vector<Matrix<T>>& slots_m() { return m_; }
  std::vector<Matrix<T>>& slots_v() { return v_; }
  void set_step_count(int64_t s) { step_ = s; }

 private:
  std::vector<Matrix<T>> m_;
  std::vector<Matrix<T>> v_;
  int64_t step_ = 0;
};

/// Global L2 norm over all gradients: dense registry plus sparse value rows.
template <typename T>
inline double global_grad_norm(const std::vector<ParamRef<T>>& params,
                               const std::vector<SparseRowGrads<T>*>& sparse) {
  double sq = 0.0;
  for (const auto& p : params)
    for (int64_t j = 0; j < p.grad->size(); ++j) {
      const double g = static_cast<double>(p.grad->data()[j]);
      sq += g * g;
    }
  for (const auto* s : sparse)
    for (const auto& [row, grad] : s->rows) {
      (void)row;
      for (const T g : grad) sq += static_cast<double>(g) * static_cast<double>(g);
    }
  return std::sqrt(sq);
}

/// Scales every gradient by clip/norm when the global norm exceeds clip.
/// Returns the pre-clip norm.
template <typename T>
inline double clip_gradients(const std::vector<ParamRef<T>>& params,
                             const std::vector<SparseRowGrads<T>*>& sparse,
                             double clip) {
  const double norm = global_grad_norm(params, sparse);
  if (clip > 0.0 && norm > clip) {
    const T scale = static_cast<T>(clip / norm);
    for (const auto& p : params) scale_inplace(*p.grad, scale);
    for (auto* s : sparse)
      for (auto& [row, grad] : s->rows) {
        (void)row;
        for (T& g : grad) g *= scale;
      }
  }
  return norm;
}

}  // namespace pkm
