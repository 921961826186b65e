#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "pkm/errors.hpp"

namespace pkm {

/// Running sum z' of memory access weights over a dataset.
///
/// Accumulators are mergeable values: parallel workers own private ones and
/// merge at the end. Sums are kept in double whatever the model precision,
/// since the usage/KL contracts are tight.
class AccessAccumulator {
 public:
  AccessAccumulator() = default;
  explicit AccessAccumulator(int64_t key_count)
      : z_prime_(static_cast<size_t>(key_count), 0.0) {}

  int64_t key_count() const { return static_cast<int64_t>(z_prime_.size()); }
  int64_t examples_seen() const { return examples_seen_; }
  const std::vector<double>& z_prime() const { return z_prime_; }

  /// Deposits every head's softmax weights of one forward record at the
  /// selected flat indices. Raw head weights are added as-is: each example
  /// contributes at most H * k nonzero entries summing to H.
  template <typename Record>
  void accumulate(const Record& rec) {
    for (const auto& head : rec.heads) {
      for (size_t i = 0; i < head.indices.size(); ++i) {
        const int64_t idx = head.indices[i];
        if (idx < 0 || idx >= key_count())
          throw std::invalid_argument("AccessAccumulator: index out of range");
        z_prime_[static_cast<size_t>(idx)] += static_cast<double>(head.weights[i]);
      }
    }
    examples_seen_ += rec.batch;
  }

  void merge(const AccessAccumulator& other) {
    if (other.key_count() != key_count())
      throw std::invalid_argument("AccessAccumulator::merge: size mismatch");
    for (size_t i = 0; i < z_prime_.size(); ++i) z_prime_[i] += other.z_prime_[i];
    examples_seen_ += other.examples_seen_;
  }

 private:
  std::vector<double> z_prime_;
  int64_t examples_seen_ = 0;
};

/// Fraction of value slots accessed at least once, in percent.
inline double usage(const AccessAccumulator& acc) {
  if (acc.examples_seen() <= 0)
    throw PreconditionError("usage: accumulator is empty");
  int64_t nonzero = 0;
  for (double z : acc.z_prime())
    if (z != 0.0) ++nonzero;
  return 100.0 * static_cast<double>(nonzero) / static_cast<double>(acc.key_count());
}

/// KL divergence between the normalized access distribution z and uniform:
/// ln|K| + sum z_i ln z_i (natural log; 0 ln 0 = 0). Clamped at zero against
/// rounding residue.
inline double kl_uniform(const AccessAccumulator& acc) {
  double norm = 0.0;
  for (double z : acc.z_prime()) norm += z;
  if (norm <= 0.0)
    throw PreconditionError("kl_uniform: accumulator has no mass");
  double sum = 0.0;
  for (double zp : acc.z_prime()) {
    if (zp > 0.0) {
      const double z = zp / norm;
      sum += z * std::log(z);
    }
  }
  const double kl = std::log(static_cast<double>(acc.key_count())) + sum;
  return kl < 0.0 ? 0.0 : kl;
}

/// exp of mean per-token negative log-likelihood (nats).
inline double perplexity(double total_nll, int64_t token_count) {
  if (token_count <= 0)
    throw std::invalid_argument("perplexity: token_count must be positive");
  return std::exp(total_nll / static_cast<double>(token_count));
}

/// Counts (indices chosen by >= 2 heads, distinct indices chosen) over all
/// examples in the record. The two tallies merge across records by addition.
template <typename Record>
inline std::pair<int64_t, int64_t> head_overlap_counts(const Record& rec) {
  int64_t shared = 0;
  int64_t distinct = 0;
  if (rec.batch == 0 || rec.heads.empty()) return {0, 0};
  const size_t k = static_cast<size_t>(rec.k);
  std::unordered_map<int64_t, int> count;
  for (int64_t t = 0; t < rec.batch; ++t) {
    count.clear();
    for (const auto& head : rec.heads) {
      const size_t base = static_cast<size_t>(t) * k;
      for (size_t j = 0; j < k; ++j) ++count[head.indices[base + j]];
    }
    for (const auto& [idx, c] : count) {
      (void)idx;
      ++distinct;
      if (c >= 2) ++shared;
    }
  }
  return {shared, distinct};
}

/// Fraction of selected product-key indices chosen by two or more heads for
/// the same input. Reported as a diagnostic; the expectation is that heads
/// overlap very little.
template <typename Record>
inline double head_overlap(const Record& rec) {
  const auto [shared, distinct] = head_overlap_counts(rec);
  return distinct == 0 ? 0.0 : static_cast<double>(shared) / static_cast<double>(distinct);
}

}  // namespace pkm
