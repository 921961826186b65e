#pragma once

#include <cstdint>
#include <random>
#include <sstream>
#include <string>

namespace pkm {

/// Deterministic RNG wrapper around std::mt19937_64.
///
/// All draws are made in double precision so that float and double
/// instantiations of the same component produce the same parameter values
/// (the float ones being the rounded doubles).
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(gen_);
  }

  double normal(double mean, double stddev) {
    return std::normal_distribution<double>(mean, stddev)(gen_);
  }

  /// Uniform integer in [0, n).
  uint64_t integer(uint64_t n) {
    return std::uniform_int_distribution<uint64_t>(0, n - 1)(gen_);
  }

  /// Derives an independent child stream; consumes one draw of this engine.
  Rng child() { return Rng(gen_()); }

  uint64_t raw() { return gen_(); }

  std::string serialize() const {
    std::ostringstream os;
    os << gen_;
    return os.str();
  }

  void deserialize(const std::string& text) {
    std::istringstream is(text);
    is >> gen_;
  }

  bool operator==(const Rng& other) const { return gen_ == other.gen_; }

 private:
  std::mt19937_64 gen_;
};

}  // namespace pkm
