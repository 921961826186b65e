#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "pkm/errors.hpp"

namespace pkm {

/// Result of a top-k selection: k distinct indices with their scores,
/// sorted by score non-increasing; equal scores ordered by lower index.
template <typename T>
struct TopKSelection {
  std::vector<int32_t> indices;
  std::vector<T> scores;

  int k() const { return static_cast<int>(indices.size()); }
};

namespace detail {

template <typename T>
struct ScoredIndex {
  T score;
  int32_t index;
};

/// a ranks strictly ahead of b.
template <typename T>
inline bool beats(const ScoredIndex<T>& a, const ScoredIndex<T>& b) {
  return a.score > b.score || (a.score == b.score && a.index < b.index);
}

/// Bounded selector: keeps the k best entries seen so far in a binary heap
/// whose top is the current worst. Scores must already be finiteness-checked.
///
/// threshold() lets scan loops reject most entries with one compare before
/// calling push; anything with score >= threshold must still go through
/// push, which applies the full tie-break.
template <typename T>
class BoundedTopK {
 public:
  explicit BoundedTopK(int k) : k_(static_cast<size_t>(k)) { heap_.reserve(k_); }

  /// Entries strictly below this cannot enter the selection.
  T threshold() const {
    return heap_.size() < k_ ? -std::numeric_limits<T>::infinity()
                             : heap_.front().score;
  }

  void push(T score, int32_t index) {
    ScoredIndex<T> e{score, index};
    if (heap_.size() < k_) {
      heap_.push_back(e);
      std::push_heap(heap_.begin(), heap_.end(), beats<T>);
    } else if (beats(e, heap_.front())) {
      std::pop_heap(heap_.begin(), heap_.end(), beats<T>);
      heap_.back() = e;
      std::push_heap(heap_.begin(), heap_.end(), beats<T>);
    }
  }

  TopKSelection<T> finish() {
    std::sort(heap_.begin(), heap_.end(), beats<T>);
    TopKSelection<T> out;
    out.indices.reserve(heap_.size());
    out.scores.reserve(heap_.size());
    for (const auto& e : heap_) {
      out.indices.push_back(e.index);
      out.scores.push_back(e.score);
    }
    return out;
  }

 private:
  size_t k_;
  std::vector<ScoredIndex<T>> heap_;
};

[[noreturn]] inline void throw_non_finite(const char* what, int64_t index) {
  throw InvalidInput(std::string(what) + ": non-finite score at index " +
                     std::to_string(index));
}

/// Threshold-guarded scan over a score stream: one predictable compare
/// rejects most entries before any heap work. Rejected NaN/-inf and
/// accepted +inf both surface as InvalidInput, so the semantics match a
/// per-element finiteness check. Selection is identical to pushing every
/// element.
template <typename T, typename ScoreAt>
inline void scan_into(BoundedTopK<T>& sel, int64_t n, const char* what,
                      ScoreAt&& score_at) {
  T threshold = sel.threshold();
  for (int64_t i = 0; i < n; ++i) {
    const T s = score_at(i);
    if (s < threshold) {
      if (!(s > -std::numeric_limits<T>::infinity())) throw_non_finite(what, i);
      continue;
    }
    if (!std::isfinite(static_cast<double>(s))) throw_non_finite(what, i);
    sel.push(s, static_cast<int32_t>(i));
    threshold = sel.threshold();
  }
}

}  // namespace detail

/// Selects the indices of the k largest scores. Ties resolve toward the
/// lower index, which keeps every selection in the library deterministic.
template <typename T>
inline TopKSelection<T> top_k(std::span<const T> scores, int k) {
  const int64_t n = static_cast<int64_t>(scores.size());
  if (k < 1 || k > n)
    throw std::invalid_argument("top_k: k must satisfy 1 <= k <= n, got k=" +
                                std::to_string(k) + " n=" + std::to_string(n));
  detail::BoundedTopK<T> sel(k);
  const T* base = scores.data();
  detail::scan_into(sel, n, "top_k", [base](int64_t i) { return base[i]; });
  return sel.finish();
}

}  // namespace pkm
