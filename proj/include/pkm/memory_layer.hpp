#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "pkm/matrix.hpp"
#include "pkm/param.hpp"
#include "pkm/product_key_index.hpp"
#include "pkm/query_network.hpp"
#include "pkm/rng.hpp"
#include "pkm/value_table.hpp"

namespace pkm {

enum class KeyMode { Product, Flat };

struct MemoryLayerConfig {
  int64_t d = 0;       // model dim; value rows live in R^d
  int64_t dq = 0;      // query dim, even
  int64_t n_sub = 0;   // |C| = |C'|; key_count = n_sub^2 (product mode)
  int heads = 1;       // H
  int k = 1;           // neighbors per head
  bool batch_norm = true;
  KeyMode key_mode = KeyMode::Product;

  int64_t key_count() const { return n_sub * n_sub; }

  void validate() const {
    if (d < 1 || dq < 2 || n_sub < 1 || heads < 1 || k < 1)
      throw std::invalid_argument("MemoryLayerConfig: non-positive shape");
    if (dq % 2 != 0) throw std::invalid_argument("MemoryLayerConfig: dq must be even");
    if (k > n_sub)
      throw std::invalid_argument("MemoryLayerConfig: k must be <= |C|");
  }
};

/// One head: a query network plus its own key structure. Product mode keys
/// are the two codebooks; flat mode stores every key explicitly and exists
/// as the trainable baseline for the product-vs-flat comparison.
template <typename T>
struct MemoryHead {
  QueryNetwork<T> query_net;
  std::optional<ProductKeyIndex<T>> index;  // product mode
  Matrix<T> codebook_grad_1;                // (n_sub, dq/2)
  Matrix<T> codebook_grad_2;
  Matrix<T> flat_keys;  // (key_count, dq), flat mode
  Matrix<T> flat_keys_grad;
};

/// The trainable product-key memory layer.
///
/// Forward, per head: query the input batch, exact top-k over the product
/// keys, softmax the selected scores, weighted-sum the selected value rows.
/// Heads share one value table; head outputs are summed.
///
/// Eval-mode forward is read-only and safe for concurrent callers. A
/// training step (forward/backward/update) needs exclusive access.
template <typename T>
class MemoryLayer {
 public:
  MemoryLayer() = default;

  /// Deterministic init from a seed: sub-keys uniform in
  /// [-1/sqrt(dq/2), 1/sqrt(dq/2)], values and query weights fan-in scaled
  /// uniform, BN gamma 1 and beta 0. Heads draw from independent child
  /// streams, so they start genuinely different.
  static MemoryLayer init(const MemoryLayerConfig& config, uint64_t seed) {
    config.validate();
    MemoryLayer layer;
    layer.config_ = config;
    Rng root(seed);

    layer.values_ = ValueTable<T>(config.key_count(), config.d);
    Rng values_rng = root.child();
    layer.values_.init(values_rng);

    const int64_t half = config.dq / 2;
    for (int h = 0; h < config.heads; ++h) {
      Rng head_rng = root.child();
      MemoryHead<T> head;
      head.query_net = QueryNetwork<T>(config.d, config.dq, config.batch_norm);
      head.query_net.init(head_rng);
      if (config.key_mode == KeyMode::Product) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(half));
        Matrix<T> c1(config.n_sub, half), c2(config.n_sub, half);
        for (int64_t i = 0; i < c1.size(); ++i)
          c1.data()[i] = static_cast<T>(head_rng.uniform(-bound, bound));
        for (int64_t i = 0; i < c2.size(); ++i)
          c2.data()[i] = static_cast<T>(head_rng.uniform(-bound, bound));
        head.index.emplace(SubKeyCodebook<T>(std::move(c1)), SubKeyCodebook<T>(std::move(c2)));
        head.codebook_grad_1 = Matrix<T>(config.n_sub, half);
        head.codebook_grad_2 = Matrix<T>(config.n_sub, half);
      } else {
        const double bound = 1.0 / std::sqrt(static_cast<double>(config.dq));
        head.flat_keys = Matrix<T>(config.key_count(), config.dq);
        for (int64_t i = 0; i < head.flat_keys.size(); ++i)
          head.flat_keys.data()[i] = static_cast<T>(head_rng.uniform(-bound, bound));
        head.flat_keys_grad = Matrix<T>(config.key_count(), config.dq);
      }
      layer.heads_.push_back(std::move(head));
    }
    return layer;
  }

  const MemoryLayerConfig& config() const { return config_; }
  int64_t key_count() const { return config_.key_count(); }
  std::vector<MemoryHead<T>>& heads() { return heads_; }
  const std::vector<MemoryHead<T>>& heads() const { return heads_; }
  ValueTable<T>& values() { return values_; }
  const ValueTable<T>& values() const { return values_; }

  /// Everything the backward pass and the access metrics need from one
  /// forward call.
  struct ForwardRecord {
    int64_t batch = 0;
    bool train = false;
    struct HeadRecord {
      Matrix<T> queries;               // (n, dq)
      typename QueryNetwork<T>::Cache query_cache;
      std::vector<int32_t> indices;    // (n * k) selected flat indices
      std::vector<T> scores;           // (n * k) pre-softmax
      std::vector<T> weights;          // (n * k) softmax weights
    };
    std::vector<HeadRecord> heads;
    int k = 0;
  };

  Matrix<T> forward(const Matrix<T>& x, Mode mode, ForwardRecord* rec) const {
    const int64_t n = x.rows();
    if (x.cols() != config_.d)
      throw std::invalid_argument("MemoryLayer::forward: input dim mismatch");
    Matrix<T> out(n, config_.d);
    if (rec) {
      rec->batch = n;
      rec->train = (mode == Mode::Train);
      rec->k = config_.k;
      rec->heads.clear();
      rec->heads.resize(static_cast<size_t>(config_.heads));
    }

    const int k = config_.k;
    for (int h = 0; h < config_.heads; ++h) {
      // const_cast only for the BN running-stat update in train mode; the
      // trainer owns the layer exclusively there, eval mode never mutates.
      auto& head = const_cast<MemoryLayer*>(this)->heads_[static_cast<size_t>(h)];
      typename QueryNetwork<T>::Cache qcache;
      Matrix<T> queries = head.query_net.forward(x, mode, rec ? &qcache : nullptr);

      std::vector<TopKSelection<T>> selections;
      if (config_.key_mode == KeyMode::Product) {
        selections = product_search_batch(queries, *head.index, k);
      } else {
        selections.reserve(static_cast<size_t>(n));
        for (int64_t t = 0; t < n; ++t)
          selections.push_back(flat_search<T>(queries.row(t), head.flat_keys, k));
      }

      typename ForwardRecord::HeadRecord* hrec =
          rec ? &rec->heads[static_cast<size_t>(h)] : nullptr;
      if (hrec) {
        hrec->indices.resize(static_cast<size_t>(n) * static_cast<size_t>(k));
        hrec->scores.resize(static_cast<size_t>(n) * static_cast<size_t>(k));
        hrec->weights.resize(static_cast<size_t>(n) * static_cast<size_t>(k));
      }

      std::vector<T> w(static_cast<size_t>(k));
      for (int64_t t = 0; t < n; ++t) {
        const TopKSelection<T>& sel = selections[static_cast<size_t>(t)];
        softmax_weights(sel.scores, w);
        T* orow = out.row(t).data();
        for (int j = 0; j < k; ++j) {
          const int64_t row = sel.indices[static_cast<size_t>(j)];
          const T* vrow = values_.values().row(row).data();
          const T wj = w[static_cast<size_t>(j)];
          for (int64_t f = 0; f < config_.d; ++f) orow[f] += wj * vrow[f];
        }
        if (hrec) {
          const size_t base = static_cast<size_t>(t) * static_cast<size_t>(k);
          for (int j = 0; j < k; ++j) {
            hrec->indices[base + static_cast<size_t>(j)] = sel.indices[static_cast<size_t>(j)];
            hrec->scores[base + static_cast<size_t>(j)] = sel.scores[static_cast<size_t>(j)];
            hrec->weights[base + static_cast<size_t>(j)] = w[static_cast<size_t>(j)];
          }
        }
      }
      if (hrec) {
        hrec->queries = std::move(queries);
        hrec->query_cache = std::move(qcache);
      }
    }
    return out;
  }

  /// Backward through softmax, selected scores, sub-keys and query nets.
  /// Top-k index sets are treated as constants. Dense parameter gradients
  /// accumulate in the layer's grad buffers; value-row gradients accumulate
  /// into `value_grads` (at most batch * H * k rows); returns dL/dx.
  Matrix<T> backward(const Matrix<T>& x, const ForwardRecord& rec,
                     const Matrix<T>& grad_out, SparseRowGrads<T>& value_grads) {
    if (!rec.train)
      throw std::invalid_argument("MemoryLayer::backward: record not from train mode");
    if (grad_out.rows() != rec.batch || grad_out.cols() != config_.d)
      throw std::invalid_argument("MemoryLayer::backward: grad shape mismatch");
    const int64_t n = rec.batch;
    const int k = rec.k;
    const int64_t half = config_.dq / 2;

    Matrix<T> dx(n, config_.d);
    for (int h = 0; h < config_.heads; ++h) {
      auto& head = heads_[static_cast<size_t>(h)];
      const auto& hrec = rec.heads[static_cast<size_t>(h)];
      Matrix<T> dqueries(n, config_.dq);

      std::vector<T> dw(static_cast<size_t>(k));
      for (int64_t t = 0; t < n; ++t) {
        const size_t base = static_cast<size_t>(t) * static_cast<size_t>(k);
        const T* g = grad_out.row(t).data();

        // dL/dw_j = g . v_j ; value grads dL/dv_j = w_j * g
        for (int j = 0; j < k; ++j) {
          const int64_t row = hrec.indices[base + static_cast<size_t>(j)];
          const T* vrow = values_.values().row(row).data();
          T acc = T(0);
          for (int64_t f = 0; f < config_.d; ++f) acc += g[f] * vrow[f];
          dw[static_cast<size_t>(j)] = acc;
          value_grads.add_scaled(row, grad_out.row(t),
                                 hrec.weights[base + static_cast<size_t>(j)], config_.d);
        }

        // softmax jacobian: ds_j = w_j * (dw_j - sum_l w_l dw_l)
        T wdot = T(0);
        for (int j = 0; j < k; ++j)
          wdot += hrec.weights[base + static_cast<size_t>(j)] * dw[static_cast<size_t>(j)];

        const T* qrow = hrec.queries.row(t).data();
        T* dqrow = dqueries.row(t).data();
        for (int j = 0; j < k; ++j) {
          const T ds = hrec.weights[base + static_cast<size_t>(j)] *
                       (dw[static_cast<size_t>(j)] - wdot);
          const int64_t flat = hrec.indices[base + static_cast<size_t>(j)];
          if (config_.key_mode == KeyMode::Product) {
            const auto [ci, cj] = head.index->decompose(flat);
            const T* c1 = head.index->codebook_1().vectors().row(ci).data();
            const T* c2 = head.index->codebook_2().vectors().row(cj).data();
            T* dc1 = head.codebook_grad_1.row(ci).data();
            T* dc2 = head.codebook_grad_2.row(cj).data();
            for (int64_t f = 0; f < half; ++f) {
              dqrow[f] += ds * c1[f];
              dc1[f] += ds * qrow[f];
            }
            for (int64_t f = 0; f < half; ++f) {
              dqrow[half + f] += ds * c2[f];
              dc2[f] += ds * qrow[half + f];
            }
          } else {
            const T* key = head.flat_keys.row(flat).data();
            T* dkey = head.flat_keys_grad.row(flat).data();
            for (int64_t f = 0; f < config_.dq; ++f) {
              dqrow[f] += ds * key[f];
              dkey[f] += ds * qrow[f];
            }
          }
        }
      }
      head.query_net.backward(x, hrec.query_cache, dqueries, dx);
    }
    return dx;
  }

  void zero_grads() {
    for (auto& head : heads_) {
      head.query_net.zero_grads();
      head.codebook_grad_1.zero();
      head.codebook_grad_2.zero();
      head.flat_keys_grad.zero();
    }
  }

  /// Dense trainable parameters (query nets and keys; the value table is
  /// owned by the sparse optimizer and not listed).
  std::vector<ParamRef<T>> params(const std::string& prefix) {
    std::vector<ParamRef<T>> out;
    for (size_t h = 0; h < heads_.size(); ++h) {
      MemoryHead<T>& head = heads_[h];
      const std::string hp = prefix + "head" + std::to_string(h) + ".";
      out.push_back({hp + "query.weight", &head.query_net.linear.weight,
                     &head.query_net.linear.dweight});
      out.push_back({hp + "query.bias", &head.query_net.linear.bias,
                     &head.query_net.linear.dbias});
      if (head.query_net.bn) {
        out.push_back({hp + "bn.gamma", &head.query_net.bn->gamma,
                       &head.query_net.bn->dgamma});
        out.push_back({hp + "bn.beta", &head.query_net.bn->beta,
                       &head.query_net.bn->dbeta});
      }
      if (head.index) {
        out.push_back({hp + "c1", &head.index->codebook_1_mut().vectors_mut(),
                       &head.codebook_grad_1});
        out.push_back({hp + "c2", &head.index->codebook_2_mut().vectors_mut(),
                       &head.codebook_grad_2});
      } else {
        out.push_back({hp + "keys", &head.flat_keys, &head.flat_keys_grad});
      }
    }
    return out;
  }

  std::vector<BufferRef<T>> buffers(const std::string& prefix) {
    std::vector<BufferRef<T>> out;
    for (size_t h = 0; h < heads_.size(); ++h) {
      MemoryHead<T>& head = heads_[h];
      if (!head.query_net.bn) continue;
      const std::string hp = prefix + "head" + std::to_string(h) + ".";
      out.push_back({hp + "bn.running_mean", &head.query_net.bn->running_mean});
      out.push_back({hp + "bn.running_var", &head.query_net.bn->running_var});
    }
    return out;
  }

  static void softmax_weights(const std::vector<T>& scores, std::vector<T>& w) {
    T mx = scores[0];
    for (const T s : scores) mx = std::max(mx, s);
    T sum = T(0);
    for (size_t j = 0; j < scores.size(); ++j) {
      w[j] = std::exp(scores[j] - mx);
      sum += w[j];
    }
    for (size_t j = 0; j < scores.size(); ++j) w[j] /= sum;
  }

 private:
  MemoryLayerConfig config_;
  std::vector<MemoryHead<T>> heads_;
  ValueTable<T> values_;
};

}  // namespace pkm
