#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "pkm/linear.hpp"
#include "pkm/matrix.hpp"
#include "pkm/memory_layer.hpp"
#include "pkm/param.hpp"
#include "pkm/rng.hpp"

namespace pkm {

/// Decoder-only transformer shapes plus where product-key memories replace
/// the FFN. Positions are 1-based layer indices.
struct ModelConfig {
  int64_t vocab = 0;
  int64_t n_layers = 2;
  int64_t d = 64;
  int64_t attn_heads = 4;
  int64_t context = 64;
  std::vector<int> memory_positions;
  MemoryLayerConfig mem;  // d is overwritten with the model dim
  uint64_t seed = 1;

  int64_t ffn_hidden() const { return 4 * d; }

  void validate() const {
    if (vocab < 2) throw std::invalid_argument("ModelConfig: vocab too small");
    if (n_layers < 1 || d < 1 || context < 1)
      throw std::invalid_argument("ModelConfig: non-positive shape");
    if (attn_heads < 1 || d % attn_heads != 0)
      throw std::invalid_argument("ModelConfig: d must divide into attention heads");
    for (int p : memory_positions)
      if (p < 1 || p > n_layers)
        throw std::invalid_argument("ModelConfig: memory position out of [1, L]");
    if (!memory_positions.empty()) {
      MemoryLayerConfig m = mem;
      m.d = d;
      m.validate();
    }
  }
};

namespace detail {

template <typename T>
inline T gelu(T x) {
  return x * T(0.5) * (T(1) + std::erf(x * T(0.7071067811865476)));
}

template <typename T>
inline T gelu_grad(T x) {
  const T cdf = T(0.5) * (T(1) + std::erf(x * T(0.7071067811865476)));
  const T pdf = std::exp(T(-0.5) * x * x) * T(0.3989422804014327);
  return cdf + x * pdf;
}

}  // namespace detail

/// Per-row layer normalization with scale and shift.
template <typename T>
struct LayerNorm {
  Matrix<T> gamma, beta, dgamma, dbeta;
  double epsilon = 1e-5;

  LayerNorm() = default;
  explicit LayerNorm(int64_t dim)
      : gamma(1, dim), beta(1, dim), dgamma(1, dim), dbeta(1, dim) {
    gamma.fill(T(1));
  }

  int64_t dim() const { return gamma.cols(); }

  struct Cache {
    Matrix<T> xhat;
    std::vector<T> inv_std;  // per row
  };

  void forward(const Matrix<T>& x, Matrix<T>& y, Cache* cache) const {
    const int64_t n = x.rows(), d = dim();
    if (cache) {
      cache->xhat = Matrix<T>(n, d);
      cache->inv_std.assign(static_cast<size_t>(n), T(0));
    }
    for (int64_t t = 0; t < n; ++t) {
      const T* xr = x.row(t).data();
      T* yr = y.row(t).data();
      T mean = T(0);
      for (int64_t j = 0; j < d; ++j) mean += xr[j];
      mean /= static_cast<T>(d);
      T var = T(0);
      for (int64_t j = 0; j < d; ++j) {
        const T c = xr[j] - mean;
        var += c * c;
      }
      var /= static_cast<T>(d);
      const T inv_std = T(1) / std::sqrt(var + static_cast<T>(epsilon));
      for (int64_t j = 0; j < d; ++j) {
        const T xh = (xr[j] - mean) * inv_std;
        yr[j] = gamma(0, j) * xh + beta(0, j);
        if (cache) cache->xhat(t, j) = xh;
      }
      if (cache) cache->inv_std[static_cast<size_t>(t)] = inv_std;
    }
  }

  void backward(const Cache& cache, const Matrix<T>& dy, Matrix<T>& dx) {
    const int64_t n = dy.rows(), d = dim();
    const T inv_d = T(1) / static_cast<T>(d);
    for (int64_t t = 0; t < n; ++t) {
      const T* dyr = dy.row(t).data();
      const T* xhr = cache.xhat.row(t).data();
      T* dxr = dx.row(t).data();
      T sum_dxhat = T(0), sum_dxhat_xhat = T(0);
      for (int64_t j = 0; j < d; ++j) {
        const T dxh = dyr[j] * gamma(0, j);
        sum_dxhat += dxh;
        sum_dxhat_xhat += dxh * xhr[j];
        dgamma(0, j) += dyr[j] * xhr[j];
        dbeta(0, j) += dyr[j];
      }
      const T inv_std = cache.inv_std[static_cast<size_t>(t)];
      for (int64_t j = 0; j < d; ++j) {
        const T dxh = dyr[j] * gamma(0, j);
        dxr[j] += inv_std * (dxh - inv_d * (sum_dxhat + xhr[j] * sum_dxhat_xhat));
      }
    }
  }

  void zero_grads() {
    dgamma.zero();
    dbeta.zero();
  }
};

/// Multi-head causal self-attention.
template <typename T>
struct Attention {
  Linear<T> wq, wk, wv, wo;
  int64_t heads = 1;

  Attention() = default;
  Attention(int64_t d, int64_t n_heads)
      : wq(d, d), wk(d, d), wv(d, d), wo(d, d), heads(n_heads) {}

  struct Cache {
    Matrix<T> q, k, v;                // (B*T, d)
    std::vector<Matrix<T>> probs;     // B*heads entries of (T, T)
    Matrix<T> concat;                 // (B*T, d)
  };

  void forward(const Matrix<T>& x, int64_t batch, int64_t t_len, Matrix<T>& y,
               Cache* cache) const {
    const int64_t d = wq.in_dim();
    const int64_t hd = d / heads;
    const T scale = T(1) / std::sqrt(static_cast<T>(hd));

    Matrix<T> q(x.rows(), d), k(x.rows(), d), v(x.rows(), d);
    wq.forward(x, q);
    wk.forward(x, k);
    wv.forward(x, v);

    Matrix<T> concat(x.rows(), d);
    std::vector<Matrix<T>> probs;
    probs.reserve(static_cast<size_t>(batch * heads));

    std::vector<T> srow(static_cast<size_t>(t_len));
    for (int64_t b = 0; b < batch; ++b) {
      const int64_t base = b * t_len;
      for (int64_t h = 0; h < heads; ++h) {
        const int64_t off = h * hd;
        Matrix<T> p(t_len, t_len);
        for (int64_t i = 0; i < t_len; ++i) {
          const T* qi = q.row(base + i).data() + off;
          // causal scores for j <= i
          T mx = -std::numeric_limits<T>::infinity();
          for (int64_t j = 0; j <= i; ++j) {
            const T* kj = k.row(base + j).data() + off;
            T s = T(0);
            for (int64_t f = 0; f < hd; ++f) s += qi[f] * kj[f];
            s *= scale;
            srow[static_cast<size_t>(j)] = s;
            mx = std::max(mx, s);
          }
          T denom = T(0);
          for (int64_t j = 0; j <= i; ++j) {
            const T e = std::exp(srow[static_cast<size_t>(j)] - mx);
            p(i, j) = e;
            denom += e;
          }
          const T inv = T(1) / denom;
          T* crow = concat.row(base + i).data() + off;
          for (int64_t j = 0; j <= i; ++j) {
            p(i, j) *= inv;
            const T* vj = v.row(base + j).data() + off;
            const T pij = p(i, j);
            for (int64_t f = 0; f < hd; ++f) crow[f] += pij * vj[f];
          }
        }
        probs.push_back(std::move(p));
      }
    }
    wo.forward(concat, y);
    if (cache) {
      cache->q = std::move(q);
      cache->k = std::move(k);
      cache->v = std::move(v);
      cache->probs = std::move(probs);
      cache->concat = std::move(concat);
    }
  }

  void backward(const Matrix<T>& x, const Cache& cache, int64_t batch, int64_t t_len,
                const Matrix<T>& dy, Matrix<T>& dx) {
    const int64_t d = wq.in_dim();
    const int64_t hd = d / heads;
    const T scale = T(1) / std::sqrt(static_cast<T>(hd));

    Matrix<T> dconcat(x.rows(), d);
    wo.backward(cache.concat, dy, &dconcat);

    Matrix<T> dq(x.rows(), d), dk(x.rows(), d), dv(x.rows(), d);
    std::vector<T> dprow(static_cast<size_t>(t_len));
    for (int64_t b = 0; b < batch; ++b) {
      const int64_t base = b * t_len;
      for (int64_t h = 0; h < heads; ++h) {
        const int64_t off = h * hd;
        const Matrix<T>& p = cache.probs[static_cast<size_t>(b * heads + h)];
        for (int64_t i = 0; i < t_len; ++i) {
          const T* dci = dconcat.row(base + i).data() + off;
          // dP and dV
          T dot_dp_p = T(0);
          for (int64_t j = 0; j <= i; ++j) {
            const T* vj = cache.v.row(base + j).data() + off;
            T acc = T(0);
            for (int64_t f = 0; f < hd; ++f) acc += dci[f] * vj[f];
            dprow[static_cast<size_t>(j)] = acc;
            dot_dp_p += acc * p(i, j);
            T* dvj = dv.row(base + j).data() + off;
            const T pij = p(i, j);
            for (int64_t f = 0; f < hd; ++f) dvj[f] += pij * dci[f];
          }
          // softmax backward, then through the scaled dot
          const T* qi = cache.q.row(base + i).data() + off;
          T* dqi = dq.row(base + i).data() + off;
          for (int64_t j = 0; j <= i; ++j) {
            const T ds = p(i, j) * (dprow[static_cast<size_t>(j)] - dot_dp_p) * scale;
            const T* kj = cache.k.row(base + j).data() + off;
            T* dkj = dk.row(base + j).data() + off;
            for (int64_t f = 0; f < hd; ++f) {
              dqi[f] += ds * kj[f];
              dkj[f] += ds * qi[f];
            }
          }
        }
      }
    }
    wq.backward(x, dq, &dx);
    wk.backward(x, dk, &dx);
    wv.backward(x, dv, &dx);
  }

  void zero_grads() {
    wq.zero_grads();
    wk.zero_grads();
    wv.zero_grads();
    wo.zero_grads();
  }
};

/// Two-layer feed-forward block with GELU.
template <typename T>
struct Ffn {
  Linear<T> w1, w2;

  Ffn() = default;
  Ffn(int64_t d, int64_t hidden) : w1(hidden, d), w2(d, hidden) {}

  struct Cache {
    Matrix<T> pre;  // (n, hidden), pre-activation
    Matrix<T> act;
  };

  void forward(const Matrix<T>& x, Matrix<T>& y, Cache* cache) const {
    Matrix<T> pre(x.rows(), w1.out_dim());
    w1.forward(x, pre);
    Matrix<T> act(x.rows(), w1.out_dim());
    for (int64_t i = 0; i < pre.size(); ++i)
      act.data()[i] = detail::gelu(pre.data()[i]);
    w2.forward(act, y);
    if (cache) {
      cache->pre = std::move(pre);
      cache->act = std::move(act);
    }
  }

  void backward(const Matrix<T>& x, const Cache& cache, const Matrix<T>& dy,
                Matrix<T>& dx) {
    Matrix<T> dact(x.rows(), w1.out_dim());
    w2.backward(cache.act, dy, &dact);
    for (int64_t i = 0; i < dact.size(); ++i)
      dact.data()[i] *= detail::gelu_grad(cache.pre.data()[i]);
    w1.backward(x, dact, &dx);
  }

  void zero_grads() {
    w1.zero_grads();
    w2.zero_grads();
  }
};

/// The language model: embeddings, pre-norm residual blocks, and a linear
/// readout. Blocks carry either an FFN or a product-key memory.
template <typename T>
class Model {
 public:
  struct Block {
    LayerNorm<T> ln1;
    Attention<T> attn;
    LayerNorm<T> ln2;
    bool is_memory = false;
    Ffn<T> ffn;
    MemoryLayer<T> mem;
  };

  Model() = default;

  static Model build(const ModelConfig& config) {
    config.validate();
    Model model;
    model.config_ = config;
    model.config_.mem.d = config.d;
    Rng rng(config.seed);

    model.tok_emb_ = Matrix<T>(config.vocab, config.d);
    model.pos_emb_ = Matrix<T>(config.context, config.d);
    model.d_tok_emb_ = Matrix<T>(config.vocab, config.d);
    model.d_pos_emb_ = Matrix<T>(config.context, config.d);
    init_uniform(model.tok_emb_, rng, 0.02);
    init_uniform(model.pos_emb_, rng, 0.02);

    for (int64_t l = 0; l < config.n_layers; ++l) {
      Block block;
      block.ln1 = LayerNorm<T>(config.d);
      block.attn = Attention<T>(config.d, config.attn_heads);
      block.attn.wq.init(rng);
      block.attn.wk.init(rng);
      block.attn.wv.init(rng);
      block.attn.wo.init(rng);
      block.ln2 = LayerNorm<T>(config.d);
      block.is_memory =
          std::find(config.memory_positions.begin(), config.memory_positions.end(),
                    static_cast<int>(l) + 1) != config.memory_positions.end();
      if (block.is_memory) {
        block.mem = MemoryLayer<T>::init(model.config_.mem, rng.raw());
      } else {
        block.ffn = Ffn<T>(config.d, config.ffn_hidden());
        block.ffn.w1.init(rng);
        block.ffn.w2.init(rng);
      }
      model.blocks_.push_back(std::move(block));
    }

    model.ln_f_ = LayerNorm<T>(config.d);
    model.head_ = Linear<T>(config.vocab, config.d);
    // Small readout init keeps the initial distribution near uniform.
    model.head_.init_uniform(rng, 0.02);

    model.value_grads_.resize(model.blocks_.size());
    return model;
  }

  const ModelConfig& config() const { return config_; }

  struct Cache {
    int64_t batch = 0;
    int64_t t_len = 0;
    std::vector<int32_t> ids;
    Matrix<T> embedded;                     // block 0 input
    std::vector<Matrix<T>> block_in;        // input to each block's ln1, after residuals
    std::vector<typename LayerNorm<T>::Cache> ln1;
    std::vector<Matrix<T>> ln1_out;
    std::vector<typename Attention<T>::Cache> attn;
    std::vector<Matrix<T>> after_attn;      // block_in + attn out
    std::vector<typename LayerNorm<T>::Cache> ln2;
    std::vector<Matrix<T>> ln2_out;
    std::vector<typename Ffn<T>::Cache> ffn;
    std::vector<typename MemoryLayer<T>::ForwardRecord> mem;
    typename LayerNorm<T>::Cache ln_f;
    Matrix<T> final_norm;
  };

  /// ids laid out row-major (batch, t_len); returns logits (batch*t_len, vocab).
  Matrix<T> forward(const std::vector<int32_t>& ids, int64_t batch, int64_t t_len,
                    Mode mode, Cache* cache) const {
    if (static_cast<int64_t>(ids.size()) != batch * t_len)
      throw std::invalid_argument("Model::forward: ids size mismatch");
    if (t_len > config_.context)
      throw std::invalid_argument("Model::forward: sequence longer than context");
    const int64_t n = batch * t_len;

    Matrix<T> x(n, config_.d);
    for (int64_t r = 0; r < n; ++r) {
      const int32_t id = ids[static_cast<size_t>(r)];
      if (id < 0 || id >= config_.vocab)
        throw std::invalid_argument("Model::forward: token id out of range");
      const T* tok = tok_emb_.row(id).data();
      const T* pos = pos_emb_.row(r % t_len).data();
      T* xr = x.row(r).data();
      for (int64_t f = 0; f < config_.d; ++f) xr[f] = tok[f] + pos[f];
    }

    if (cache) {
      cache->batch = batch;
      cache->t_len = t_len;
      cache->ids = ids;
      cache->embedded = x;
      const size_t nb = blocks_.size();
      cache->block_in.resize(nb);
      cache->ln1.resize(nb);
      cache->ln1_out.resize(nb);
      cache->attn.resize(nb);
      cache->after_attn.resize(nb);
      cache->ln2.resize(nb);
      cache->ln2_out.resize(nb);
      cache->ffn.resize(nb);
      cache->mem.resize(nb);
    }

    for (size_t l = 0; l < blocks_.size(); ++l) {
      const Block& block = blocks_[l];
      if (cache) cache->block_in[l] = x;

      Matrix<T> normed(n, config_.d);
      block.ln1.forward(x, normed, cache ? &cache->ln1[l] : nullptr);
      Matrix<T> attn_out(n, config_.d);
      block.attn.forward(normed, batch, t_len, attn_out, cache ? &cache->attn[l] : nullptr);
      add_inplace(x, attn_out);
      if (cache) {
        cache->ln1_out[l] = std::move(normed);
        cache->after_attn[l] = x;
      }

      Matrix<T> normed2(n, config_.d);
      block.ln2.forward(x, normed2, cache ? &cache->ln2[l] : nullptr);
      Matrix<T> block_out;
      if (block.is_memory) {
        block_out = block.mem.forward(normed2, mode, cache ? &cache->mem[l] : nullptr);
      } else {
        block_out = Matrix<T>(n, config_.d);
        block.ffn.forward(normed2, block_out, cache ? &cache->ffn[l] : nullptr);
      }
      add_inplace(x, block_out);
      if (cache) cache->ln2_out[l] = std::move(normed2);
    }

    Matrix<T> normed(n, config_.d);
    ln_f_.forward(x, normed, cache ? &cache->ln_f : nullptr);
    Matrix<T> logits(n, config_.vocab);
    head_.forward(normed, logits);
    if (cache) cache->final_norm = std::move(normed);
    return logits;
  }

  /// Mean-per-token cross entropy plus dlogits. Loss is accumulated in
  /// double regardless of T.
  static double cross_entropy(const Matrix<T>& logits,
                              const std::vector<int32_t>& targets, Matrix<T>* dlogits) {
    const int64_t n = logits.rows();
    const int64_t v = logits.cols();
    if (static_cast<int64_t>(targets.size()) != n)
      throw std::invalid_argument("cross_entropy: target size mismatch");
    double total = 0.0;
    const T inv_n = T(1) / static_cast<T>(n);
    for (int64_t t = 0; t < n; ++t) {
      const T* row = logits.row(t).data();
      T mx = row[0];
      for (int64_t j = 1; j < v; ++j) mx = std::max(mx, row[j]);
      T denom = T(0);
      for (int64_t j = 0; j < v; ++j) denom += std::exp(row[j] - mx);
      const int32_t target = targets[static_cast<size_t>(t)];
      const double log_denom = std::log(static_cast<double>(denom));
      total += log_denom + static_cast<double>(mx) - static_cast<double>(row[target]);
      if (dlogits) {
        T* drow = dlogits->row(t).data();
        const T inv_denom = T(1) / denom;
        for (int64_t j = 0; j < v; ++j)
          drow[j] = std::exp(row[j] - mx) * inv_denom * inv_n;
        drow[target] -= inv_n;
      }
    }
    return total / static_cast<double>(n);
  }

  /// Accumulates all parameter gradients. Sparse value-row gradients land in
  /// value_grads()[l] for each memory block l.
  void backward(const Cache& cache, const Matrix<T>& dlogits) {
    const int64_t n = cache.batch * cache.t_len;
    Matrix<T> dx(n, config_.d);
    head_.backward(cache.final_norm, dlogits, &dx);
    Matrix<T> dresid(n, config_.d);
    ln_f_.backward(cache.ln_f, dx, dresid);

    for (int64_t l = static_cast<int64_t>(blocks_.size()) - 1; l >= 0; --l) {
      Block& block = blocks_[static_cast<size_t>(l)];
      const size_t sl = static_cast<size_t>(l);

      // through the FFN/memory residual
      Matrix<T> dnormed2(n, config_.d);
      if (block.is_memory) {
        dnormed2 = block.mem.backward(cache.ln2_out[sl], cache.mem[sl], dresid,
                                      value_grads_[sl]);
      } else {
        block.ffn.backward(cache.ln2_out[sl], cache.ffn[sl], dresid, dnormed2);
      }
      block.ln2.backward(cache.ln2[sl], dnormed2, dresid);

      // through the attention residual
      Matrix<T> dnormed1(n, config_.d);
      block.attn.backward(cache.ln1_out[sl], cache.attn[sl], cache.batch, cache.t_len,
                          dresid, dnormed1);
      block.ln1.backward(cache.ln1[sl], dnormed1, dresid);
    }

    // embeddings
    for (int64_t r = 0; r < n; ++r) {
      const int32_t id = cache.ids[static_cast<size_t>(r)];
      const T* g = dresid.row(r).data();
      T* dtok = d_tok_emb_.row(id).data();
      T* dpos = d_pos_emb_.row(r % cache.t_len).data();
      for (int64_t f = 0; f < config_.d; ++f) {
        dtok[f] += g[f];
        dpos[f] += g[f];
      }
    }
  }

  void zero_grads() {
    d_tok_emb_.zero();
    d_pos_emb_.zero();
    for (auto& block : blocks_) {
      block.ln1.zero_grads();
      block.attn.zero_grads();
      block.ln2.zero_grads();
      if (block.is_memory)
        block.mem.zero_grads();
      else
        block.ffn.zero_grads();
    }
    ln_f_.zero_grads();
    head_.zero_grads();
    for (auto& vg : value_grads_) vg.clear();
  }

  /// Dense trainable parameters, in a fixed order. Value tables are not
  /// included: they belong to the sparse value optimizer.
  std::vector<ParamRef<T>> params() {
    std::vector<ParamRef<T>> out;
    out.push_back({"tok_emb", &tok_emb_, &d_tok_emb_});
    out.push_back({"pos_emb", &pos_emb_, &d_pos_emb_});
    for (size_t l = 0; l < blocks_.size(); ++l) {
      Block& block = blocks_[l];
      const std::string p = "layer" + std::to_string(l) + ".";
      auto add_linear = [&](const std::string& name, Linear<T>& lin) {
        out.push_back({p + name + ".weight", &lin.weight, &lin.dweight});
        out.push_back({p + name + ".bias", &lin.bias, &lin.dbias});
      };
      out.push_back({p + "ln1.gamma", &block.ln1.gamma, &block.ln1.dgamma});
      out.push_back({p + "ln1.beta", &block.ln1.beta, &block.ln1.dbeta});
      add_linear("attn.wq", block.attn.wq);
      add_linear("attn.wk", block.attn.wk);
      add_linear("attn.wv", block.attn.wv);
      add_linear("attn.wo", block.attn.wo);
      out.push_back({p + "ln2.gamma", &block.ln2.gamma, &block.ln2.dgamma});
      out.push_back({p + "ln2.beta", &block.ln2.beta, &block.ln2.dbeta});
      if (block.is_memory) {
        for (auto& ref : block.mem.params(p + "mem.")) out.push_back(ref);
      } else {
        add_linear("ffn.w1", block.ffn.w1);
        add_linear("ffn.w2", block.ffn.w2);
      }
    }
    out.push_back({"ln_f.gamma", &ln_f_.gamma, &ln_f_.dgamma});
    out.push_back({"ln_f.beta", &ln_f_.beta, &ln_f_.dbeta});
    out.push_back({"head.weight", &head_.weight, &head_.dweight});
    out.push_back({"head.bias", &head_.bias, &head_.dbias});
    return out;
  }

  /// Non-trainable state that still belongs in a checkpoint (BN running stats).
  std::vector<BufferRef<T>> buffers() {
    std::vector<BufferRef<T>> out;
    for (size_t l = 0; l < blocks_.size(); ++l) {
      Block& block = blocks_[l];
      if (!block.is_memory) continue;
      const std::string p = "layer" + std::to_string(l) + ".mem.";
      for (auto& ref : block.mem.buffers(p)) out.push_back(ref);
    }
    return out;
  }

  int64_t param_count() {
    int64_t count = 0;
    for (const auto& p : params()) count += p.value->size();
    for (auto& block : blocks_)
      if (block.is_memory) count += block.mem.values().values().size();
    return count;
  }

  std::vector<Block>& blocks() { return blocks_; }
  const std::vector<Block>& blocks() const { return blocks_; }
  std::vector<SparseRowGrads<T>>& value_grads() { return value_grads_; }

  /// 1-based positions of the memory blocks, in layer order.
  std::vector<int> memory_layers() const {
    std::vector<int> out;
    for (size_t l = 0; l < blocks_.size(); ++l)
      if (blocks_[l].is_memory) out.push_back(static_cast<int>(l) + 1);
    return out;
  }

 private:
  static void init_uniform(Matrix<T>& m, Rng& rng, double bound) {
    for (int64_t i = 0; i < m.size(); ++i)
      m.data()[i] = static_cast<T>(rng.uniform(-bound, bound));
  }

  ModelConfig config_;
  Matrix<T> tok_emb_, pos_emb_, d_tok_emb_, d_pos_emb_;
  std::vector<Block> blocks_;
  LayerNorm<T> ln_f_;
  Linear<T> head_;
  std::vector<SparseRowGrads<T>> value_grads_;
};

}  // namespace pkm
