#pragma once

#include <cstdint>

namespace pkm {

/// Counts scalar arithmetic performed by one search call, so that the
/// complexity claims can be asserted exactly rather than asymptotically.
///
/// mul_adds counts multiply-accumulates spent computing scores.
/// adds counts the plain additions of the candidate merge, which re-adds
/// the two sub-scores instead of re-scoring materialized keys.
struct OpCounter {
  uint64_t mul_adds = 0;
  uint64_t adds = 0;

  void reset() {
    mul_adds = 0;
    adds = 0;
  }
};

}  // namespace pkm
