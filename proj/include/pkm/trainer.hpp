#pragma once

#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "pkm/adam.hpp"
#include "pkm/corpus.hpp"
#include "pkm/errors.hpp"
#include "pkm/metrics.hpp"
#include "pkm/parallel.hpp"
#include "pkm/transformer.hpp"

namespace pkm {

struct TrainConfig {
  ModelConfig model;
  int64_t batch = 16;
  int64_t steps = 500;
  double lr = 2.5e-4;  // dense peak rate, keys and query nets included
  int64_t warmup = 400;
  double value_lr = 1e-3;  // sparse value rows learn faster
  double beta1 = 0.9;
  double beta2 = 0.98;
  double adam_eps = 1e-8;
  double clip_norm = 5.0;
};

struct LossEntry {
  int64_t step;
  double loss;
  double lr;
};

/// Everything one training run owns: the model, both optimizers, the data
/// RNG and the loss history. Value rows belong exclusively to the sparse
/// optimizer inside each ValueTable.
template <typename T>
struct TrainState {
  TrainConfig config;
  Model<T> model;
  DenseAdam<T> optimizer;
  Rng data_rng{0};
  int64_t step = 0;
  std::vector<LossEntry> history;

  static TrainState init(const TrainConfig& config) {
    TrainState state;
    state.config = config;
    state.model = Model<T>::build(config.model);
    state.optimizer.beta1 = config.beta1;
    state.optimizer.beta2 = config.beta2;
    state.optimizer.eps = config.adam_eps;
    state.optimizer.attach(state.model.params());
    state.data_rng = Rng(config.model.seed * 0x9e3779b97f4a7c15ull + 0x2545f4914f6cdd1dull);
    return state;
  }
};

/// One optimization step on a batch sampled from the train split: forward,
/// cross entropy, backward, global-norm clip, dense Adam with the warmup
/// schedule, then the lazy sparse Adam step on touched value rows.
template <typename T>
double train_step(TrainState<T>& state, const TokenizedCorpus& corpus) {
  const TrainConfig& cfg = state.config;
  const std::vector<int32_t>& data = corpus.train;
  const int64_t t_len = cfg.model.context;
  if (static_cast<int64_t>(data.size()) < t_len + 2)
    throw std::invalid_argument("train_step: train split shorter than one window");

  std::vector<int32_t> ids(static_cast<size_t>(cfg.batch * t_len));
  std::vector<int32_t> targets(static_cast<size_t>(cfg.batch * t_len));
  const uint64_t span = static_cast<uint64_t>(data.size()) - static_cast<uint64_t>(t_len) - 1;
  for (int64_t b = 0; b < cfg.batch; ++b) {
    const int64_t start = static_cast<int64_t>(state.data_rng.integer(span + 1));
    for (int64_t t = 0; t < t_len; ++t) {
      ids[static_cast<size_t>(b * t_len + t)] = data[static_cast<size_t>(start + t)];
      targets[static_cast<size_t>(b * t_len + t)] = data[static_cast<size_t>(start + t + 1)];
    }
  }

  state.model.zero_grads();
  typename Model<T>::Cache cache;
  Matrix<T> logits = state.model.forward(ids, cfg.batch, t_len, Mode::Train, &cache);
  Matrix<T> dlogits(logits.rows(), logits.cols());
  const double loss = Model<T>::cross_entropy(logits, targets, &dlogits);
  state.step += 1;
  const double lr = warmup_inv_sqrt_lr(cfg.lr, state.step, cfg.warmup);

  if (!std::isfinite(loss)) {
    std::ostringstream diag;
    diag << "step=" << state.step << " lr=" << lr << " loss=" << loss
         << " batch=" << cfg.batch << " context=" << t_len;
    throw TrainingDiverged("train_step: non-finite loss", diag.str());
  }

  state.model.backward(cache, dlogits);

  auto params = state.model.params();
  std::vector<SparseRowGrads<T>*> sparse;
  for (size_t l = 0; l < state.model.blocks().size(); ++l)
    if (state.model.blocks()[l].is_memory)
      sparse.push_back(&state.model.value_grads()[l]);
  clip_gradients(params, sparse, cfg.clip_norm);

  state.optimizer.step(params, lr);
  for (size_t l = 0; l < state.model.blocks().size(); ++l) {
    auto& block = state.model.blocks()[l];
    if (block.is_memory)
      block.mem.values().sparse_adam_step(state.model.value_grads()[l], cfg.value_lr,
                                          cfg.beta1, cfg.beta2, cfg.adam_eps);
  }

  state.history.push_back({state.step, loss, lr});
  return loss;
}

/// Per-memory-layer usage/KL/overlap plus perplexity for one split.
struct EvalResult {
  double perplexity = 0.0;
  double total_nll = 0.0;
  int64_t tokens = 0;
  struct MemoryStats {
    int layer = 0;  // 1-based position
    double usage = 0.0;
    double kl = 0.0;
    double overlap = 0.0;
  };
  std::vector<MemoryStats> memory;
};

/// Full eval-mode pass over a split in fixed non-overlapping windows.
/// Work is sharded deterministically: results are identical for any
/// PKM_THREADS because shards are fixed and merged in order.
template <typename T>
EvalResult evaluate(const Model<T>& model, const TokenizedCorpus& corpus,
                    const std::string& split_name, int64_t window_batch = 8) {
  const std::vector<int32_t>& data = corpus.split(split_name);
  const int64_t t_len = model.config().context;
  if (static_cast<int64_t>(data.size()) < 2)
    throw std::invalid_argument("evaluate: split '" + split_name + "' is empty");

  // Fixed windows: starts at multiples of t_len, last partial window kept.
  struct Window {
    int64_t start;
    int64_t len;
  };
  std::vector<Window> windows;
  for (int64_t s = 0; s + 1 < static_cast<int64_t>(data.size()); s += t_len) {
    const int64_t len = std::min<int64_t>(t_len, static_cast<int64_t>(data.size()) - 1 - s);
    if (len < 1) break;
    windows.push_back({s, len});
  }

  // Shard = one batch of windows with a common length.
  struct Shard {
    std::vector<Window> windows;
  };
  std::vector<Shard> shards;
  for (size_t i = 0; i < windows.size();) {
    Shard shard;
    const int64_t len = windows[i].len;
    while (i < windows.size() && windows[i].len == len &&
           static_cast<int64_t>(shard.windows.size()) < window_batch)
      shard.windows.push_back(windows[i++]);
    shards.push_back(std::move(shard));
  }

  const std::vector<int> mem_layers = model.memory_layers();
  struct ShardResult {
    double nll = 0.0;
    int64_t tokens = 0;
    std::vector<AccessAccumulator> acc;
    std::vector<int64_t> overlap_shared;
    std::vector<int64_t> overlap_distinct;
  };
  std::vector<ShardResult> results(shards.size());

  parallel_shards(static_cast<int>(shards.size()), [&](int si) {
    const Shard& shard = shards[static_cast<size_t>(si)];
    ShardResult& res = results[static_cast<size_t>(si)];
    res.acc.assign(mem_layers.size(),
                   AccessAccumulator(model.config().mem.key_count()));
    res.overlap_shared.assign(mem_layers.size(), 0);
    res.overlap_distinct.assign(mem_layers.size(), 0);

    const int64_t batch = static_cast<int64_t>(shard.windows.size());
    const int64_t len = shard.windows[0].len;
    std::vector<int32_t> ids(static_cast<size_t>(batch * len));
    std::vector<int32_t> targets(static_cast<size_t>(batch * len));
    for (int64_t b = 0; b < batch; ++b) {
      const int64_t start = shard.windows[static_cast<size_t>(b)].start;
      for (int64_t t = 0; t < len; ++t) {
        ids[static_cast<size_t>(b * len + t)] = data[static_cast<size_t>(start + t)];
        targets[static_cast<size_t>(b * len + t)] = data[static_cast<size_t>(start + t + 1)];
      }
    }
    typename Model<T>::Cache cache;
    Matrix<T> logits = model.forward(ids, batch, len, Mode::Eval, &cache);
    const double mean = Model<T>::cross_entropy(logits, targets, nullptr);
    res.nll = mean * static_cast<double>(batch * len);
    res.tokens = batch * len;

    size_t mi = 0;
    for (size_t l = 0; l < model.blocks().size(); ++l) {
      if (!model.blocks()[l].is_memory) continue;
      const auto& rec = cache.mem[l];
      res.acc[mi].accumulate(rec);
      const auto [shared, distinct] = head_overlap_counts(rec);
      res.overlap_shared[mi] += shared;
      res.overlap_distinct[mi] += distinct;
      ++mi;
    }
  });

  EvalResult out;
  std::vector<AccessAccumulator> acc(mem_layers.size(),
                                     AccessAccumulator(model.config().mem.key_count()));
  std::vector<int64_t> shared(mem_layers.size(), 0), distinct(mem_layers.size(), 0);
  for (const auto& res : results) {
    out.total_nll += res.nll;
    out.tokens += res.tokens;
    for (size_t m = 0; m < mem_layers.size(); ++m) {
      acc[m].merge(res.acc[m]);
      shared[m] += res.overlap_shared[m];
      distinct[m] += res.overlap_distinct[m];
    }
  }
  out.perplexity = perplexity(out.total_nll, out.tokens);
  for (size_t m = 0; m < mem_layers.size(); ++m) {
    EvalResult::MemoryStats stats;
    stats.layer = mem_layers[m];
    stats.usage = usage(acc[m]);
    stats.kl = kl_uniform(acc[m]);
    stats.overlap = distinct[m] == 0
                        ? 0.0
                        : static_cast<double>(shared[m]) / static_cast<double>(distinct[m]);
    out.memory.push_back(stats);
  }
  return out;
}

}  // namespace pkm
