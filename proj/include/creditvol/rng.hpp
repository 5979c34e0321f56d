#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace creditvol {

// Random-number plumbing shared by every stochastic routine.
//
// Seeds are expanded with splitmix64. A named stream is derived from a user
// seed as  splitmix64(seed ^ fnv1a64(tag)), so "filter", "proposal",
// "accept", "backward" and so on never share a sequence. Counter-based
// normals (used for the particle filter's auxiliary variates) are a pure
// function of (key, counter) and therefore stable under any re-ordering of
// the loops that consume them.

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t fnv1a64(std::string_view s);
std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag);
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

// Uniform in the open interval (0, 1) built from the top 52 bits.
double bits_to_open_unit(std::uint64_t bits);

// Standard normal variate indexed by (key, counter); Box-Muller on two
// hashed uniforms.
double counter_normal(std::uint64_t key, std::uint64_t counter);

// Standard normal CDF and its inverse.
double normal_cdf(double x);
double normal_quantile(double p);

// Sequential generator: mt19937_64 engine with portable uniform/normal
// transforms (the std:: distributions are implementation-defined).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform();
  double normal();
  // Index in [0, n).
  std::size_t index(std::size_t n);

 private:
  std::mt19937_64 engine_;
  double cached_normal_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace creditvol
