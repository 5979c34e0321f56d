#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "creditvol/sv_model.hpp"

namespace creditvol {

// Auxiliary variates indexing one likelihood estimate. Both blocks hold
// standard normals, row-major by time: u_h is T x N (state innovations),
// u_a is (T - 1) x N (resampling, mapped to uniforms through Phi).
struct SeedBlock {
  std::size_t T = 0;
  std::size_t N = 0;
  std::vector<double> u_h;
  std::vector<double> u_a;

  std::span<const double> state_row(std::size_t t) const { return {u_h.data() + t * N, N}; }
  std::span<const double> resample_row(std::size_t t) const { return {u_a.data() + t * N, N}; }
};

// Entry (t, i) of each block is counter_normal(key(seed, block), t * N + i).
SeedBlock make_seed_block(std::size_t T, std::size_t N, std::uint64_t seed);

// u' = gamma * u + sqrt(1 - gamma^2) * u_fresh, u_fresh = make_seed_block(T, N, seed).
SeedBlock correlate_seed(const SeedBlock& u, double gamma, std::uint64_t seed);

// Inverse-CDF multinomial draw: result[i] is the smallest (0-based) j with
// sum_{k <= j} w_k >= uniforms[i].
std::vector<std::size_t> sorted_multinomial_resample(std::span<const double> sorted_weights,
                                                     std::span<const double> uniforms);

struct FilterOptions {
  // Sort particles before resampling. Switching this off is only useful to
  // demonstrate the discontinuities it removes.
  bool sort_particles = true;
  // Replaces log p(y_t | h_t, y_{t-1}) when set (surrogate models in tests).
  std::function<double(double y_t, double y_prev, double h_t)> log_observation;
};

struct ParticleSystem {
  std::size_t T = 0;
  std::size_t N = 0;
  std::vector<double> particles;     // T x N
  std::vector<double> norm_weights;  // T x N, rows sum to 1
  std::vector<double> log_weights;   // T x N, unnormalized
  std::vector<std::size_t> ancestors;  // (T - 1) x N, 0-based; row t feeds time t + 1
  std::vector<double> loglik_terms;  // log( (1/N) sum_i w_t^i ), length T
  double loglik = 0.0;

  std::span<const double> particle_row(std::size_t t) const { return {particles.data() + t * N, N}; }
  std::span<const double> weight_row(std::size_t t) const { return {norm_weights.data() + t * N, N}; }
  double ess(std::size_t t) const;
};

// Correlated bootstrap particle filter with sorted multinomial resampling at
// every step. Deterministic in (y, p, u, N).
ParticleSystem correlated_pf(std::span<const double> y, const SvParams& p, const SeedBlock& u,
                             std::size_t N, const FilterOptions& options = {});

// One trajectory from the particle approximation of the smoothing
// distribution (backward simulation).
LatentPath backward_simulate(const ParticleSystem& ps, std::span<const double> y,
                             const SvParams& p, std::uint64_t seed);

// Debug dump. Layout, all little-endian: u64 T, u64 N, f64 loglik, then
// particles, norm_weights and log_weights as T x N f64 row-major, then the
// ancestors as (T - 1) x N u64 row-major.
void write_binary(const ParticleSystem& ps, const std::filesystem::path& path);
ParticleSystem read_binary(const std::filesystem::path& path);

}  // namespace creditvol
