#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "pkm/errors.hpp"
#include "pkm/matrix.hpp"
#include "pkm/op_counter.hpp"
#include "pkm/topk.hpp"

namespace pkm {

/// One of the two factor sets of the product key set: n_sub vectors of
/// dimension dq/2. Rows are validated finite on construction; training
/// updates go through vectors_mut() under exclusive access.
template <typename T>
class SubKeyCodebook {
 public:
  explicit SubKeyCodebook(Matrix<T> vectors) : vectors_(std::move(vectors)) {
    if (vectors_.rows() < 1)
      throw std::invalid_argument("SubKeyCodebook: need at least one sub-key");
    if (vectors_.cols() < 1)
      throw std::invalid_argument("SubKeyCodebook: sub-key dimension must be >= 1");
    if (!vectors_.all_finite())
      throw InvalidInput("SubKeyCodebook: non-finite sub-key entry");
  }

  int64_t n_sub() const { return vectors_.rows(); }
  int64_t sub_dim() const { return vectors_.cols(); }

  const Matrix<T>& vectors() const { return vectors_; }
  Matrix<T>& vectors_mut() { return vectors_; }

 private:
  Matrix<T> vectors_;
};

/// Two sub-key codebooks and the flat numbering of their Cartesian product.
/// Keys are never materialized during search; materialize() exists for the
/// exhaustive oracle and for the flat benchmark baseline.
///
/// Immutable during search: any number of concurrent readers is safe, a
/// training writer needs the index to itself.
template <typename T>
class ProductKeyIndex {
 public:
  ProductKeyIndex(SubKeyCodebook<T> codebook_1, SubKeyCodebook<T> codebook_2)
      : c1_(std::move(codebook_1)), c2_(std::move(codebook_2)) {
    if (c1_.sub_dim() != c2_.sub_dim())
      throw std::invalid_argument("ProductKeyIndex: codebooks disagree on sub-key dim");
  }

  const SubKeyCodebook<T>& codebook_1() const { return c1_; }
  const SubKeyCodebook<T>& codebook_2() const { return c2_; }
  SubKeyCodebook<T>& codebook_1_mut() { return c1_; }
  SubKeyCodebook<T>& codebook_2_mut() { return c2_; }

  int64_t key_count() const { return c1_.n_sub() * c2_.n_sub(); }
  int64_t sub_dim() const { return c1_.sub_dim(); }
  int64_t query_dim() const { return 2 * sub_dim(); }

  /// Row-major pairing: flat = i * |C'| + j.
  int64_t compose(int64_t i, int64_t j) const {
    if (i < 0 || i >= c1_.n_sub() || j < 0 || j >= c2_.n_sub())
      throw std::invalid_argument("compose: sub-key index out of range");
    return i * c2_.n_sub() + j;
  }

  std::pair<int64_t, int64_t> decompose(int64_t flat) const {
    if (flat < 0 || flat >= key_count())
      throw std::invalid_argument("decompose: flat index out of range");
    return {flat / c2_.n_sub(), flat % c2_.n_sub()};
  }

  /// Materializes all |K| product keys as (c_i ++ c'_j) rows, in flat order.
  Matrix<T> materialize() const {
    Matrix<T> keys(key_count(), query_dim());
    const int64_t half = sub_dim();
    for (int64_t i = 0; i < c1_.n_sub(); ++i) {
      for (int64_t j = 0; j < c2_.n_sub(); ++j) {
        T* out = keys.row(i * c2_.n_sub() + j).data();
        const T* a = c1_.vectors().row(i).data();
        const T* b = c2_.vectors().row(j).data();
        for (int64_t f = 0; f < half; ++f) out[f] = a[f];
        for (int64_t f = 0; f < half; ++f) out[half + f] = b[f];
      }
    }
    return keys;
  }

 private:
  SubKeyCodebook<T> c1_;
  SubKeyCodebook<T> c2_;
};

namespace detail {

template <typename T>
inline void check_query(std::span<const T> query) {
  for (size_t f = 0; f < query.size(); ++f)
    if (!std::isfinite(static_cast<double>(query[f])))
      throw InvalidInput("search: non-finite query coordinate " + std::to_string(f));
}

/// scores[i] = q_half . c_i for every sub-key row, contraction in ascending
/// feature order. `ct` is the transposed codebook (sub_dim, n_sub), which
/// makes the inner loop contiguous; the accumulation order per score is
/// identical to a plain row dot.
template <typename T>
inline void subkey_scores_t(std::span<const T> q_half, const Matrix<T>& ct,
                            std::span<T> out) {
  const int64_t n = ct.cols();
  const int64_t half = ct.rows();
  for (int64_t i = 0; i < n; ++i) out[i] = T(0);
  for (int64_t f = 0; f < half; ++f) {
    const T qf = q_half[f];
    const T* crow = ct.row(f).data();
    for (int64_t i = 0; i < n; ++i) out[i] += qf * crow[i];
  }
}

}  // namespace detail

/// Exhaustive top-k inner-product search over an explicit key matrix.
/// This is both the flat-key baseline and the correctness oracle for
/// product_search.
template <typename T>
inline TopKSelection<T> flat_search(std::span<const T> query, const Matrix<T>& keys,
                                    int k, OpCounter* ops = nullptr) {
  if (static_cast<int64_t>(query.size()) != keys.cols())
    throw std::invalid_argument("flat_search: query dim " + std::to_string(query.size()) +
                                " != key dim " + std::to_string(keys.cols()));
  const int64_t n = keys.rows();
  if (k < 1 || k > n)
    throw std::invalid_argument("flat_search: k out of range");
  detail::check_query(query);

  detail::BoundedTopK<T> sel(k);
  detail::scan_into(sel, n, "flat_search",
                    [&](int64_t i) { return dot(query, keys.row(i)); });
  if (ops) ops->mul_adds += static_cast<uint64_t>(n) * static_cast<uint64_t>(keys.cols());
  return sel.finish();
}

/// Exact top-k search over the product key set.
///
/// The query splits into contiguous halves q1 = query[0, dq/2) and
/// q2 = query[dq/2, dq). Each half is scored against its codebook, the k
/// best sub-keys on each side form k*k candidate pairs, and candidate
/// scores are the re-added sub-scores. The k best candidates are exactly
/// the k best product keys, indices and scores both, under the shared
/// lower-index tie-break.
template <typename T>
inline TopKSelection<T> product_search(std::span<const T> query,
                                       const ProductKeyIndex<T>& index, int k,
                                       OpCounter* ops = nullptr) {
  const int64_t n1 = index.codebook_1().n_sub();
  const int64_t n2 = index.codebook_2().n_sub();
  if (static_cast<int64_t>(query.size()) != index.query_dim())
    throw std::invalid_argument("product_search: query dim mismatch");
  if (k < 1 || k > n1 || k > n2)
    throw std::invalid_argument("product_search: k must satisfy 1 <= k <= min(|C|,|C'|)");
  detail::check_query(query);

  const int64_t half = index.sub_dim();
  std::vector<T> s1(static_cast<size_t>(n1)), s2(static_cast<size_t>(n2));
  for (int64_t i = 0; i < n1; ++i)
    s1[static_cast<size_t>(i)] = dot(query.first(static_cast<size_t>(half)),
                                     index.codebook_1().vectors().row(i));
  for (int64_t j = 0; j < n2; ++j)
    s2[static_cast<size_t>(j)] = dot(query.subspan(static_cast<size_t>(half)),
                                     index.codebook_2().vectors().row(j));
  if (ops) ops->mul_adds += static_cast<uint64_t>(n1 + n2) * static_cast<uint64_t>(half);

  TopKSelection<T> sub1 = top_k<T>(s1, k);
  TopKSelection<T> sub2 = top_k<T>(s2, k);

  // k*k candidate pairs; candidate score = s1 + s2, candidate id = flat index.
  detail::BoundedTopK<T> sel(k);
  for (int i = 0; i < k; ++i) {
    const int64_t a = sub1.indices[static_cast<size_t>(i)];
    const T sa = sub1.scores[static_cast<size_t>(i)];
    for (int j = 0; j < k; ++j) {
      const int64_t b = sub2.indices[static_cast<size_t>(j)];
      const T s = sa + sub2.scores[static_cast<size_t>(j)];
      if (s >= sel.threshold()) sel.push(s, static_cast<int32_t>(a * n2 + b));
    }
  }
  if (ops) ops->adds += static_cast<uint64_t>(k) * static_cast<uint64_t>(k);
  return sel.finish();
}

/// Batched product search sharing one transposed-codebook scratch across
/// queries. Bit-identical to per-query product_search.
template <typename T>
inline std::vector<TopKSelection<T>> product_search_batch(
    const Matrix<T>& queries, const ProductKeyIndex<T>& index, int k,
    OpCounter* ops = nullptr) {
  const int64_t n1 = index.codebook_1().n_sub();
  const int64_t n2 = index.codebook_2().n_sub();
  if (queries.cols() != index.query_dim())
    throw std::invalid_argument("product_search_batch: query dim mismatch");
  if (k < 1 || k > n1 || k > n2)
    throw std::invalid_argument("product_search_batch: k out of range");

  const int64_t half = index.sub_dim();
  const Matrix<T> ct1 = transpose(index.codebook_1().vectors());
  const Matrix<T> ct2 = transpose(index.codebook_2().vectors());

  std::vector<TopKSelection<T>> out(static_cast<size_t>(queries.rows()));
  std::vector<T> s1(static_cast<size_t>(n1)), s2(static_cast<size_t>(n2));
  for (int64_t q = 0; q < queries.rows(); ++q) {
    std::span<const T> query = queries.row(q);
    detail::check_query(query);
    detail::subkey_scores_t(query.first(static_cast<size_t>(half)), ct1, std::span<T>(s1));
    detail::subkey_scores_t(query.subspan(static_cast<size_t>(half)), ct2, std::span<T>(s2));
    if (ops) ops->mul_adds += static_cast<uint64_t>(n1 + n2) * static_cast<uint64_t>(half);

    TopKSelection<T> sub1 = top_k<T>(s1, k);
    TopKSelection<T> sub2 = top_k<T>(s2, k);
    detail::BoundedTopK<T> sel(k);
    for (int i = 0; i < k; ++i) {
      const int64_t a = sub1.indices[static_cast<size_t>(i)];
      const T sa = sub1.scores[static_cast<size_t>(i)];
      for (int j = 0; j < k; ++j) {
        const int64_t b = sub2.indices[static_cast<size_t>(j)];
        const T s = sa + sub2.scores[static_cast<size_t>(j)];
        if (s >= sel.threshold()) sel.push(s, static_cast<int32_t>(a * n2 + b));
      }
    }
    if (ops) ops->adds += static_cast<uint64_t>(k) * static_cast<uint64_t>(k);
    out[static_cast<size_t>(q)] = sel.finish();
  }
  return out;
}

}  // namespace pkm
