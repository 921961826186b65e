#include <catch_amalgamated.hpp>

#include <algorithm>
#include <numeric>
#include <vector>

#include "pkm/rng.hpp"
#include "pkm/topk.hpp"

using pkm::top_k;
using pkm::TopKSelection;

namespace {

// reference: full sort by (score desc, index asc), take k
template <typename T>
TopKSelection<T> sort_oracle(const std::vector<T>& scores, int k) {
  std::vector<int32_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](int32_t a, int32_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  });
  TopKSelection<T> out;
  for (int i = 0; i < k; ++i) {
    out.indices.push_back(idx[i]);
    out.scores.push_back(scores[idx[i]]);
  }
  return out;
}

}  // namespace

TEST_CASE("top_k picks the k largest with their indices", "[topk]") {
  const std::vector<double> scores{0.1, 0.9, 0.5};
  const auto sel = top_k<double>(scores, 2);
  CHECK(sel.indices == std::vector<int32_t>{1, 2});
  CHECK(sel.scores == std::vector<double>{0.9, 0.5});
}

TEST_CASE("top_k ties resolve toward the lower index", "[topk]") {
  const std::vector<double> scores{5.0, 5.0, 1.0};
  const auto sel = top_k<double>(scores, 1);
  CHECK(sel.indices == std::vector<int32_t>{0});
  CHECK(sel.scores == std::vector<double>{5.0});
}

TEST_CASE("top_k with k = n is a full descending sort", "[topk]") {
  pkm::Rng rng(7);
  std::vector<double> scores(64);
  for (double& s : scores) s = rng.uniform(-10.0, 10.0);
  const auto sel = top_k<double>(scores, 64);
  const auto want = sort_oracle(scores, 64);
  CHECK(sel.indices == want.indices);
  CHECK(sel.scores == want.scores);
  CHECK(std::is_sorted(sel.scores.rbegin(), sel.scores.rend()));
}

TEST_CASE("top_k matches the sort oracle on random inputs with ties", "[topk]") {
  pkm::Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(rng.integer(40));
    const int k = 1 + static_cast<int>(rng.integer(static_cast<uint64_t>(n)));
    std::vector<double> scores(static_cast<size_t>(n));
    // small integer grid so ties actually happen
    for (double& s : scores) s = static_cast<double>(rng.integer(6));
    const auto sel = top_k<double>(scores, k);
    const auto want = sort_oracle(scores, k);
    REQUIRE(sel.indices == want.indices);
    REQUIRE(sel.scores == want.scores);
  }
}

TEST_CASE("top_k is permutation-consistent on distinct scores", "[topk]") {
  pkm::Rng rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 16;
    const int k = 5;
    std::vector<double> scores(n);
    for (int i = 0; i < n; ++i) scores[i] = static_cast<double>(i) + rng.uniform(0.0, 0.5);
    std::vector<int32_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    for (int i = n - 1; i > 0; --i)
      std::swap(perm[i], perm[rng.integer(static_cast<uint64_t>(i) + 1)]);

    std::vector<double> permuted(n);
    for (int i = 0; i < n; ++i) permuted[perm[i]] = scores[i];

    const auto base = top_k<double>(scores, k);
    const auto mapped = top_k<double>(permuted, k);
    for (int j = 0; j < k; ++j) {
      CHECK(mapped.indices[j] == perm[base.indices[j]]);
      CHECK(mapped.scores[j] == base.scores[j]);
    }
  }
}

TEST_CASE("top_k rejects bad k and non-finite scores", "[topk]") {
  const std::vector<double> scores{1.0, 2.0};
  CHECK_THROWS_AS(top_k<double>(scores, 0), std::invalid_argument);
  CHECK_THROWS_AS(top_k<double>(scores, 3), std::invalid_argument);
  const std::vector<double> bad{1.0, std::numeric_limits<double>::quiet_NaN()};
  CHECK_THROWS_AS(top_k<double>(bad, 1), pkm::InvalidInput);
  const std::vector<double> inf{1.0, std::numeric_limits<double>::infinity()};
  CHECK_THROWS_AS(top_k<double>(inf, 1), pkm::InvalidInput);
}
