#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace zsst {

// Deterministic RNG used everywhere randomness is part of the contract.
// std::mt19937_64 is fully specified by the standard; the distributions
// layered on top here are spelled out explicitly because the std::*
// distribution classes are implementation-defined and would break
// reproducibility across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform integer in [0, n). Rejection sampling, no modulo bias.
  std::size_t bounded(std::size_t n);

  // Uniform double in [0, 1) with 53 bits of entropy.
  double next_double();

  // Standard normal via Box-Muller.
  double next_gaussian();

  template <typename T>
  void shuffle(std::vector<T>& v) {
    if (v.size() < 2) return;
    for (std::size_t i = v.size() - 1; i > 0; --i) {
      std::size_t j = bounded(i + 1);
      using std::swap;
      swap(v[i], v[j]);
    }
  }

 private:
  std::mt19937_64 gen_;
  bool has_cached_gaussian_ = false;
  double cached_gaussian_ = 0.0;
};

// Stateless seed derivation (splitmix64 finalizer over seed ^ stream).
// Used to give each iteration / repetition its own reproducible stream.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

// k distinct indices drawn uniformly from [0, population), returned in
// ascending order. Deterministic per rng state.
std::vector<std::size_t> sample_without_replacement(std::size_t population,
                                                    std::size_t k, Rng& rng);

}  // namespace zsst
