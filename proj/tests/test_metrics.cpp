#include <catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "pkm/metrics.hpp"

using pkm::AccessAccumulator;
using pkm::kl_uniform;
using pkm::perplexity;
using pkm::usage;

namespace {

// hand-rolled record shaped like MemoryLayer::ForwardRecord
struct FakeHead {
  std::vector<int32_t> indices;
  std::vector<double> weights;
};
struct FakeRecord {
  int64_t batch = 0;
  int k = 0;
  std::vector<FakeHead> heads;
};

FakeRecord one_example(std::vector<int32_t> idx, std::vector<double> w) {
  FakeRecord rec;
  rec.batch = 1;
  rec.k = static_cast<int>(idx.size());
  rec.heads.push_back({std::move(idx), std::move(w)});
  return rec;
}

}  // namespace

TEST_CASE("a single deposit lands at the selected indices", "[metrics]") {
  AccessAccumulator acc(16);
  acc.accumulate(one_example({3, 7}, {0.6, 0.4}));
  CHECK(acc.z_prime()[3] == 0.6);
  CHECK(acc.z_prime()[7] == 0.4);
  double total = 0.0;
  for (double z : acc.z_prime()) total += z;
  CHECK(total == 1.0);
  CHECK(acc.examples_seen() == 1);
}

TEST_CASE("accumulating a record twice doubles z'", "[metrics]") {
  AccessAccumulator acc(8);
  const auto rec = one_example({1, 5}, {0.3, 0.7});
  acc.accumulate(rec);
  acc.accumulate(rec);
  CHECK(acc.z_prime()[1] == 0.6);
  CHECK(acc.z_prime()[5] == 1.4);
}

TEST_CASE("merging accumulators equals accumulating the concatenated stream",
          "[metrics]") {
  AccessAccumulator a(8), b(8), whole(8);
  const auto r1 = one_example({0, 3}, {0.5, 0.5});
  const auto r2 = one_example({3, 6}, {0.9, 0.1});
  const auto r3 = one_example({1, 2}, {0.2, 0.8});
  a.accumulate(r1);
  b.accumulate(r2);
  b.accumulate(r3);
  whole.accumulate(r1);
  whole.accumulate(r2);
  whole.accumulate(r3);
  a.merge(b);
  for (int i = 0; i < 8; ++i)
    CHECK_THAT(a.z_prime()[i],
               Catch::Matchers::WithinRel(whole.z_prime()[i], 1e-9) ||
                   Catch::Matchers::WithinAbs(whole.z_prime()[i], 1e-15));
  CHECK(a.examples_seen() == whole.examples_seen());
}

TEST_CASE("usage counts nonzero slots as a percentage", "[metrics]") {
  AccessAccumulator acc(8);
  acc.accumulate(one_example({0, 2, 4}, {0.2, 0.3, 0.5}));
  CHECK(usage(acc) == 37.5);

  AccessAccumulator all(4);
  all.accumulate(one_example({0, 1, 2, 3}, {0.25, 0.25, 0.25, 0.25}));
  CHECK(usage(all) == 100.0);
}

TEST_CASE("usage of k=32 slots out of 2^18 is tiny", "[metrics]") {
  AccessAccumulator acc(262144);
  std::vector<int32_t> idx(32);
  std::vector<double> w(32, 1.0 / 32.0);
  for (int i = 0; i < 32; ++i) idx[i] = i * 100;
  FakeRecord rec;
  rec.batch = 1;
  rec.k = 32;
  rec.heads.push_back({idx, w});
  acc.accumulate(rec);
  CHECK_THAT(usage(acc), Catch::Matchers::WithinRel(100.0 * 32.0 / 262144.0, 1e-12));
}

TEST_CASE("usage is monotone as more records arrive", "[metrics]") {
  AccessAccumulator acc(32);
  double last = 0.0;
  for (int i = 0; i < 16; ++i) {
    acc.accumulate(one_example({i * 2, (i * 7) % 32}, {0.5, 0.5}));
    const double u = usage(acc);
    CHECK(u >= last);
    last = u;
  }
}

TEST_CASE("KL against uniform hits the textbook values", "[metrics]") {
  AccessAccumulator uniform(4);
  uniform.accumulate(one_example({0, 1, 2, 3}, {0.25, 0.25, 0.25, 0.25}));
  CHECK_THAT(kl_uniform(uniform), Catch::Matchers::WithinAbs(0.0, 1e-12));

  AccessAccumulator single(262144);
  single.accumulate(one_example({77}, {1.0}));
  CHECK_THAT(kl_uniform(single),
             Catch::Matchers::WithinAbs(18.0 * std::log(2.0), 1e-9));

  AccessAccumulator two(4);
  two.accumulate(one_example({0, 1}, {0.5, 0.5}));
  CHECK_THAT(kl_uniform(two), Catch::Matchers::WithinAbs(std::log(2.0), 1e-9));
}

TEST_CASE("KL bounds: non-negative and at most ln|K|", "[metrics]") {
  pkm::AccessAccumulator acc(64);
  for (int i = 0; i < 40; ++i) {
    const int32_t a = (i * 13) % 64;
    const int32_t b = (i * 29 + 5) % 64;
    if (a == b) continue;
    acc.accumulate(one_example({a, b}, {0.9, 0.1}));
  }
  const double kl = kl_uniform(acc);
  CHECK(kl >= 0.0);
  CHECK(kl <= std::log(64.0));
}

TEST_CASE("perplexity definition", "[metrics]") {
  CHECK(perplexity(0.0, 100) == 1.0);
  CHECK_THAT(perplexity(std::log(2.0) * 50, 50), Catch::Matchers::WithinRel(2.0, 1e-12));
  // uniform model over V symbols
  const double v = 37.0;
  CHECK_THAT(perplexity(std::log(v) * 10, 10), Catch::Matchers::WithinRel(v, 1e-12));
  CHECK_THROWS_AS(perplexity(1.0, 0), std::invalid_argument);
}

TEST_CASE("empty accumulators violate metric preconditions", "[metrics]") {
  AccessAccumulator acc(8);
  CHECK_THROWS_AS(usage(acc), pkm::PreconditionError);
  CHECK_THROWS_AS(kl_uniform(acc), pkm::PreconditionError);
}

TEST_CASE("out-of-range index in a record is rejected", "[metrics]") {
  AccessAccumulator acc(4);
  CHECK_THROWS_AS(acc.accumulate(one_example({4}, {1.0})), std::invalid_argument);
}

TEST_CASE("same-key-every-query gives perfect usage but near-degenerate KL",
          "[metrics]") {
  // every example: almost all mass on slot 0, dust everywhere else
  const int64_t keys = 64;
  AccessAccumulator acc(keys);
  const double dust = 1e-9;
  std::vector<int32_t> idx(static_cast<size_t>(keys));
  std::vector<double> w(static_cast<size_t>(keys), dust);
  for (int i = 0; i < keys; ++i) idx[static_cast<size_t>(i)] = i;
  w[0] = 1.0 - dust * static_cast<double>(keys - 1);
  FakeRecord rec;
  rec.batch = 1;
  rec.k = static_cast<int>(keys);
  rec.heads.push_back({idx, w});
  for (int rep = 0; rep < 10; ++rep) acc.accumulate(rec);

  CHECK(usage(acc) == 100.0);
  const double kl = kl_uniform(acc);
  CHECK(std::abs(kl - std::log(static_cast<double>(keys))) <
        0.01 * std::log(static_cast<double>(keys)));
}

TEST_CASE("head overlap counts indices picked by several heads", "[metrics]") {
  FakeRecord rec;
  rec.batch = 1;
  rec.k = 2;
  rec.heads.push_back({{1, 2}, {0.5, 0.5}});
  rec.heads.push_back({{2, 3}, {0.5, 0.5}});
  const auto [shared, distinct] = pkm::head_overlap_counts(rec);
  CHECK(shared == 1);
  CHECK(distinct == 3);
  CHECK_THAT(pkm::head_overlap(rec), Catch::Matchers::WithinRel(1.0 / 3.0, 1e-12));
}
