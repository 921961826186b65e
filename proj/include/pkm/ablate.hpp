#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "pkm/checkpoint.hpp"
#include "pkm/records.hpp"
#include "pkm/trainer.hpp"

namespace pkm {

/// Desk-scale ablation grids over one axis. Every cell trains the same
/// budget from the same seed and reports validation perplexity plus the
/// memory diagnostics.
struct AblateAxis {
  static constexpr const char* kSize = "size";
  static constexpr const char* kBn = "bn";
  static constexpr const char* kPosition = "position";
  static constexpr const char* kHeadsKnn = "heads_knn";
  static constexpr const char* kFlatVsProduct = "flat_vs_product";
};

template <typename T>
inline Record ablate_cell(const std::string& axis, const std::string& cell,
                          TrainConfig config, const TokenizedCorpus& corpus) {
  config.model.vocab = corpus.vocab_size();
  TrainState<T> state = TrainState<T>::init(config);
  for (int64_t s = 0; s < config.steps; ++s) train_step(state, corpus);
  const EvalResult eval = evaluate(state.model, corpus, "valid");

  Record rec;
  rec.set("kind", std::string("ablate")).set("axis", axis).set("cell", cell);
  rec.set("seed", static_cast<int64_t>(config.model.seed));
  rec.set("steps", config.steps);
  rec.set("n_sub", config.model.mem.n_sub);
  rec.set("keys", config.model.mem.key_count());
  rec.set("heads", config.model.mem.heads);
  rec.set("k", config.model.mem.k);
  rec.set("bn", config.model.mem.batch_norm);
  rec.set("key_mode",
          std::string(config.model.mem.key_mode == KeyMode::Flat ? "flat" : "product"));
  std::string positions;
  for (int p : config.model.memory_positions)
    positions += (positions.empty() ? "" : "+") + std::to_string(p);
  rec.set("positions", positions.empty() ? std::string("none") : positions);
  rec.set("ppl", eval.perplexity);
  if (!eval.memory.empty()) {
    rec.set("usage", eval.memory[0].usage);
    rec.set("kl", eval.memory[0].kl);
    rec.set("overlap", eval.memory[0].overlap);
  }
  return rec;
}

/// Runs one axis of the ablation. `base` fixes everything the axis does not
/// vary. Returns one record per cell, in grid order.
template <typename T>
inline std::vector<Record> run_ablation(const std::string& axis, const TrainConfig& base,
                                        const TokenizedCorpus& corpus) {
  std::vector<Record> records;
  if (axis == AblateAxis::kSize) {
    for (const int64_t n_sub : {int64_t(4), int64_t(16), int64_t(64)}) {
      TrainConfig config = base;
      config.model.mem.n_sub = n_sub;
      config.model.mem.k = static_cast<int>(std::min<int64_t>(config.model.mem.k, n_sub));
      records.push_back(
          ablate_cell<T>(axis, "K" + std::to_string(n_sub * n_sub), config, corpus));
    }
  } else if (axis == AblateAxis::kBn) {
    for (const bool bn : {false, true}) {
      TrainConfig config = base;
      config.model.mem.batch_norm = bn;
      records.push_back(ablate_cell<T>(axis, bn ? "bn_on" : "bn_off", config, corpus));
    }
  } else if (axis == AblateAxis::kPosition) {
    TrainConfig six = base;
    six.model.n_layers = 6;
    for (int pos = 1; pos <= 6; ++pos) {
      TrainConfig config = six;
      config.model.memory_positions = {pos};
      records.push_back(ablate_cell<T>(axis, "pos" + std::to_string(pos), config, corpus));
    }
  } else if (axis == AblateAxis::kHeadsKnn) {
    const std::pair<int, int> grid[] = {{1, 64}, {2, 32}, {4, 16}, {8, 8}};
    for (const auto& [h, k] : grid) {
      TrainConfig config = base;
      config.model.mem.heads = h;
      config.model.mem.k = k;
      if (config.model.mem.n_sub < k) config.model.mem.n_sub = k;
      records.push_back(ablate_cell<T>(
          axis, "h" + std::to_string(h) + "k" + std::to_string(k), config, corpus));
    }
  } else if (axis == AblateAxis::kFlatVsProduct) {
    for (const KeyMode mode : {KeyMode::Product, KeyMode::Flat}) {
      TrainConfig config = base;
      config.model.mem.key_mode = mode;
      records.push_back(ablate_cell<T>(
          axis, mode == KeyMode::Flat ? "flat" : "product", config, corpus));
    }
  } else {
    throw std::invalid_argument("ablate: unknown axis '" + axis +
                                "' (size|bn|position|heads_knn|flat_vs_product)");
  }
  return records;
}

}  // namespace pkm
