#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "pkm/matrix.hpp"
#include "pkm/parallel.hpp"
#include "pkm/product_key_index.hpp"
#include "pkm/records.hpp"
#include "pkm/rng.hpp"

namespace pkm {

struct BenchConfig {
  std::vector<int64_t> subkeys = {128, 256, 512};  // |C| per configuration
  int64_t dq = 64;
  int k = 16;
  int heads = 1;
  std::string mode = "both";  // product | flat | both
  int64_t flat_ceiling = int64_t(1) << 18;
  int64_t queries = 128;  // timed batch per rep
  int reps = 3;
  int64_t verify_queries = 256;
  uint64_t seed = 1;
};

/// One benchmark row: a (|K|, mode) cell with measured throughput, the
/// instrumented op counts for a single query through all heads, and the
/// exactness flag against the flat oracle.
struct BenchRow {
  int64_t n_sub = 0;
  int64_t key_count = 0;
  int64_t dq = 0;
  int k = 0;
  int heads = 1;
  std::string mode;
  double qps_single = 0.0;  // single-threaded
  double qps_multi = 0.0;   // PKM_THREADS workers
  uint64_t mul_adds = 0;    // per query
  uint64_t adds = 0;
  bool exact = true;

  Record record() const {
    Record r;
    r.set("kind", std::string("bench"))
        .set("mode", mode)
        .set("subkeys", n_sub)
        .set("keys", key_count)
        .set("dq", dq)
        .set("k", k)
        .set("heads", heads)
        .set("qps_single", qps_single)
        .set("qps_multi", qps_multi)
        .set("mul_adds", static_cast<int64_t>(mul_adds))
        .set("adds", static_cast<int64_t>(adds))
        .set("exact", exact);
    return r;
  }
};

struct BenchReport {
  std::vector<BenchRow> rows;
  bool all_exact = true;
};

namespace detail {

/// Exhaustive oracle that scores every product key by enumerating all
/// (i, j) pairs. Used above the flat materialization ceiling; identical
/// ranking semantics to flat_search up to score rounding.
template <typename T>
inline TopKSelection<T> exhaustive_pair_oracle(std::span<const T> query,
                                               const ProductKeyIndex<T>& index, int k) {
  const int64_t n1 = index.codebook_1().n_sub();
  const int64_t n2 = index.codebook_2().n_sub();
  const int64_t half = index.sub_dim();
  std::vector<T> s1(static_cast<size_t>(n1)), s2(static_cast<size_t>(n2));
  for (int64_t i = 0; i < n1; ++i)
    s1[static_cast<size_t>(i)] = dot(query.first(static_cast<size_t>(half)),
                                     index.codebook_1().vectors().row(i));
  for (int64_t j = 0; j < n2; ++j)
    s2[static_cast<size_t>(j)] = dot(query.subspan(static_cast<size_t>(half)),
                                     index.codebook_2().vectors().row(j));
  pkm::detail::BoundedTopK<T> sel(k);
  for (int64_t i = 0; i < n1; ++i)
    for (int64_t j = 0; j < n2; ++j)
      sel.push(s1[static_cast<size_t>(i)] + s2[static_cast<size_t>(j)],
               static_cast<int32_t>(i * n2 + j));
  return sel.finish();
}

template <typename T>
inline bool same_selection(const TopKSelection<T>& a, const TopKSelection<T>& b) {
  return a.indices == b.indices && a.scores == b.scores;
}

inline double best_qps(const std::vector<double>& times_sec, int64_t queries) {
  double best = times_sec[0];
  for (double t : times_sec) best = std::min(best, t);
  return static_cast<double>(queries) / best;
}

}  // namespace detail

/// Runs the timed sweep. Product mode is timed batched; flat mode scans the
/// materialized key matrix per query and refuses sizes above the ceiling.
template <typename T>
inline BenchReport run_bench(const BenchConfig& config) {
  using Clock = std::chrono::steady_clock;
  BenchReport report;
  if (config.mode != "product" && config.mode != "flat" && config.mode != "both")
    throw std::invalid_argument("bench: mode must be product|flat|both");

  for (const int64_t n_sub : config.subkeys) {
    if (n_sub < config.k)
      throw std::invalid_argument("bench: k exceeds |C|=" + std::to_string(n_sub));
    const int64_t key_count = n_sub * n_sub;
    const bool want_product = config.mode != "flat";
    const bool want_flat = config.mode != "product";
    if (config.mode == "flat" && key_count > config.flat_ceiling)
      throw std::invalid_argument(
          "bench: flat mode at |K|=" + std::to_string(key_count) +
          " exceeds the ceiling of " + std::to_string(config.flat_ceiling) +
          " keys; raise --flat-ceiling to force it");

    Rng rng(config.seed + static_cast<uint64_t>(n_sub));
    const int64_t half = config.dq / 2;
    std::vector<ProductKeyIndex<T>> indexes;
    for (int h = 0; h < config.heads; ++h) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(half));
      Matrix<T> c1(n_sub, half), c2(n_sub, half);
      for (int64_t i = 0; i < c1.size(); ++i)
        c1.data()[i] = static_cast<T>(rng.uniform(-bound, bound));
      for (int64_t i = 0; i < c2.size(); ++i)
        c2.data()[i] = static_cast<T>(rng.uniform(-bound, bound));
      indexes.emplace_back(SubKeyCodebook<T>(std::move(c1)), SubKeyCodebook<T>(std::move(c2)));
    }

    Matrix<T> queries(config.queries, config.dq);
    for (int64_t i = 0; i < queries.size(); ++i)
      queries.data()[i] = static_cast<T>(rng.uniform(-1.0, 1.0));

    if (want_product) {
      BenchRow row;
      row.n_sub = n_sub;
      row.key_count = key_count;
      row.dq = config.dq;
      row.k = config.k;
      row.heads = config.heads;
      row.mode = "product";

      // ops for one query through all heads
      OpCounter ops;
      for (const auto& index : indexes)
        (void)product_search<T>(queries.row(0), index, config.k, &ops);
      row.mul_adds = ops.mul_adds;
      row.adds = ops.adds;

      auto run_all = [&](int max_workers) {
        if (max_workers == 1) {
          for (const auto& index : indexes)
            (void)product_search_batch(queries, index, config.k);
          return;
        }
        const int n_shards = 8;
        const int64_t per = (queries.rows() + n_shards - 1) / n_shards;
        parallel_shards(
            n_shards,
            [&](int s) {
              const int64_t lo = s * per;
              const int64_t hi = std::min<int64_t>(lo + per, queries.rows());
              if (lo >= hi) return;
              Matrix<T> chunk(hi - lo, config.dq);
              for (int64_t q = lo; q < hi; ++q)
                for (int64_t f = 0; f < config.dq; ++f) chunk(q - lo, f) = queries(q, f);
              for (const auto& index : indexes)
                (void)product_search_batch(chunk, index, config.k);
            },
            max_workers);
      };

      run_all(1);  // warm
      std::vector<double> t_single, t_multi;
      for (int rep = 0; rep < config.reps; ++rep) {
        const auto t0 = Clock::now();
        run_all(1);
        t_single.push_back(std::chrono::duration<double>(Clock::now() - t0).count());
      }
      for (int rep = 0; rep < config.reps; ++rep) {
        const auto t0 = Clock::now();
        run_all(0);
        t_multi.push_back(std::chrono::duration<double>(Clock::now() - t0).count());
      }
      row.qps_single = detail::best_qps(t_single, queries.rows());
      row.qps_multi = detail::best_qps(t_multi, queries.rows());

      // exactness against the flat oracle on a sampled subset
      Matrix<T> verify(config.verify_queries, config.dq);
      for (int64_t i = 0; i < verify.size(); ++i)
        verify.data()[i] = static_cast<T>(rng.uniform(-1.0, 1.0));
      for (const auto& index : indexes) {
        const bool materialize = key_count <= config.flat_ceiling;
        Matrix<T> keys;
        if (materialize) keys = index.materialize();
        for (int64_t q = 0; q < verify.rows(); ++q) {
          const TopKSelection<T> got = product_search<T>(verify.row(q), index, config.k);
          const TopKSelection<T> want =
              materialize ? flat_search<T>(verify.row(q), keys, config.k)
                          : detail::exhaustive_pair_oracle<T>(verify.row(q), index, config.k);
          bool same = got.indices == want.indices;
          if (same && materialize) {
            // scores may differ by one rounding between the split and the
            // full-dot route; require exact equality of the split route
            for (int j = 0; j < config.k && same; ++j) {
              const auto [ci, cj] = index.decompose(got.indices[static_cast<size_t>(j)]);
              const T s1 = dot(std::span<const T>(verify.row(q)).first(static_cast<size_t>(half)),
                               index.codebook_1().vectors().row(ci));
              const T s2 = dot(std::span<const T>(verify.row(q)).subspan(static_cast<size_t>(half)),
                               index.codebook_2().vectors().row(cj));
              same = (got.scores[static_cast<size_t>(j)] == s1 + s2);
            }
          } else if (same) {
            same = got.scores == want.scores;
          }
          if (!same) {
            row.exact = false;
            report.all_exact = false;
            break;
          }
        }
        if (!row.exact) break;
      }
      report.rows.push_back(std::move(row));
    }

    if (want_flat) {
      if (key_count > config.flat_ceiling) continue;  // mirrors the sweep table gaps
      BenchRow row;
      row.n_sub = n_sub;
      row.key_count = key_count;
      row.dq = config.dq;
      row.k = config.k;
      row.heads = config.heads;
      row.mode = "flat";

      std::vector<Matrix<T>> flat;
      flat.reserve(indexes.size());
      for (const auto& index : indexes) flat.push_back(index.materialize());

      OpCounter ops;
      for (const auto& keys : flat)
        (void)flat_search<T>(queries.row(0), keys, config.k, &ops);
      row.mul_adds = ops.mul_adds;
      row.adds = ops.adds;

      auto run_all = [&](int max_workers) {
        const int n_shards = 8;
        const int64_t per = (queries.rows() + n_shards - 1) / n_shards;
        parallel_shards(
            n_shards,
            [&](int s) {
              const int64_t lo = s * per;
              const int64_t hi = std::min<int64_t>(lo + per, queries.rows());
              for (int64_t q = lo; q < hi; ++q)
                for (const auto& keys : flat)
                  (void)flat_search<T>(queries.row(q), keys, config.k);
            },
            max_workers);
      };

      run_all(1);
      std::vector<double> t_single, t_multi;
      for (int rep = 0; rep < config.reps; ++rep) {
        const auto t0 = Clock::now();
        run_all(1);
        t_single.push_back(std::chrono::duration<double>(Clock::now() - t0).count());
      }
      for (int rep = 0; rep < config.reps; ++rep) {
        const auto t0 = Clock::now();
        run_all(0);
        t_multi.push_back(std::chrono::duration<double>(Clock::now() - t0).count());
      }
      row.qps_single = detail::best_qps(t_single, queries.rows());
      row.qps_multi = detail::best_qps(t_multi, queries.rows());
      report.rows.push_back(std::move(row));
    }
  }
  return report;
}

}  // namespace pkm
