#include "creditvol/particle_filter.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "creditvol/errors.hpp"
#include "creditvol/rng.hpp"

namespace creditvol {

namespace {

constexpr double kLogSqrt2Pi = 0.91893853320467274178;
constexpr double kWeightSumTol = 1e-10;

void fill_block(std::vector<double>& out, std::size_t rows, std::size_t N, std::uint64_t key) {
  out.resize(rows * N);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = counter_normal(key, k);
}

// Normalizes log weights in place into `norm`; returns log of the mean weight.
double normalize(std::span<const double> logw, std::span<double> norm, std::size_t t) {
  const double m = *std::max_element(logw.begin(), logw.end());
  if (!std::isfinite(m)) throw FilterFailure(t + 1);
  double s = 0.0;
  for (std::size_t i = 0; i < logw.size(); ++i) {
    norm[i] = std::exp(logw[i] - m);
    s += norm[i];
  }
  for (double& w : norm) w /= s;
  return m + std::log(s) - std::log(static_cast<double>(logw.size()));
}

template <class T>
void put(std::ofstream& out, T v) {
  if constexpr (std::endian::native == std::endian::big) {
    auto bytes = std::bit_cast<std::array<char, sizeof(T)>>(v);
    std::reverse(bytes.begin(), bytes.end());
    out.write(bytes.data(), sizeof(T));
  } else {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
  }
}

template <class T>
T get(std::ifstream& in) {
  std::array<char, sizeof(T)> bytes{};
  in.read(bytes.data(), sizeof(T));
  if (!in) throw DataError("truncated particle dump");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  return std::bit_cast<T>(bytes);
}

}  // namespace

SeedBlock make_seed_block(std::size_t T, std::size_t N, std::uint64_t seed) {
  if (T < 1) throw ConfigError("seed block needs T >= 1");
  if (N < 2) throw ConfigError("seed block needs N >= 2");
  SeedBlock u;
  u.T = T;
  u.N = N;
  fill_block(u.u_h, T, N, derive_seed(seed, "u_h"));
  fill_block(u.u_a, T - 1, N, derive_seed(seed, "u_a"));
  return u;
}

SeedBlock correlate_seed(const SeedBlock& u, double gamma, std::uint64_t seed) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("gamma must lie in [0, 1]");
  if (gamma == 1.0) return u;
  const SeedBlock fresh = make_seed_block(u.T, u.N, seed);
  if (gamma == 0.0) return fresh;
  const double c = std::sqrt(1.0 - gamma * gamma);
  SeedBlock out = u;
  for (std::size_t k = 0; k < out.u_h.size(); ++k) out.u_h[k] = gamma * u.u_h[k] + c * fresh.u_h[k];
  for (std::size_t k = 0; k < out.u_a.size(); ++k) out.u_a[k] = gamma * u.u_a[k] + c * fresh.u_a[k];
  return out;
}

std::vector<std::size_t> sorted_multinomial_resample(std::span<const double> sorted_weights,
                                                     std::span<const double> uniforms) {
  const std::size_t N = sorted_weights.size();
  if (N == 0) throw DimensionError("empty weight vector");
  std::vector<double> cdf(N);
  double acc = 0.0;
  for (std::size_t j = 0; j < N; ++j) {
    if (!(sorted_weights[j] >= 0.0)) throw DataError("negative or non-finite resampling weight");
    acc += sorted_weights[j];
    cdf[j] = acc;
  }
  if (std::abs(acc - 1.0) > kWeightSumTol) {
    throw DataError("resampling weights sum to " + std::to_string(acc) + ", not 1");
  }
  // Last index carrying positive mass, for uniforms beyond a rounded-down total.
  std::size_t last = N - 1;
  while (last > 0 && sorted_weights[last] == 0.0) --last;

  std::vector<std::size_t> out(uniforms.size());
  for (std::size_t i = 0; i < uniforms.size(); ++i) {
    const auto it = std::lower_bound(cdf.begin(), cdf.end(), uniforms[i]);
    const auto j = static_cast<std::size_t>(it - cdf.begin());
    out[i] = std::min(j, last);
  }
  return out;
}

double ParticleSystem::ess(std::size_t t) const {
  double s = 0.0;
  for (double w : weight_row(t)) s += w * w;
  return 1.0 / s;
}

ParticleSystem correlated_pf(std::span<const double> y, const SvParams& p, const SeedBlock& u,
                             std::size_t N, const FilterOptions& options) {
  const std::size_t T = y.size();
  if (N < 2) throw ConfigError("particle filter needs N >= 2");
  if (T == 0) throw DimensionError("empty observation vector");
  if (u.T != T || u.N != N || u.u_h.size() != T * N || u.u_a.size() != (T - 1) * N) {
    throw DimensionError("seed block is " + std::to_string(u.T) + "x" + std::to_string(u.N) +
                         ", filter call is " + std::to_string(T) + "x" + std::to_string(N));
  }
  p.validate();

  ParticleSystem ps;
  ps.T = T;
  ps.N = N;
  ps.particles.resize(T * N);
  ps.norm_weights.resize(T * N);
  ps.log_weights.resize(T * N);
  ps.ancestors.resize((T - 1) * N);
  ps.loglik_terms.resize(T);

  auto log_obs = [&](double yt, double yprev, double h) {
    if (options.log_observation) return options.log_observation(yt, yprev, h);
    const double e = yt - p.phi_y * yprev;
    return -kLogSqrt2Pi - 0.5 * h - 0.5 * e * e * std::exp(-h);
  };

  // t = 1: stationary initial law
  {
    const double sd = p.tau / std::sqrt(1.0 - p.phi_h * p.phi_h);
    auto uh = u.state_row(0);
    for (std::size_t i = 0; i < N; ++i) {
      const double h = p.mu_h + sd * uh[i];
      ps.particles[i] = h;
      ps.log_weights[i] = log_obs(y[0], 0.0, h);
    }
    ps.loglik_terms[0] = normalize({ps.log_weights.data(), N}, {ps.norm_weights.data(), N}, 0);
  }

  const double sd_t = std::sqrt(p.tau * p.tau * (1.0 - p.rho * p.rho));
  std::vector<std::size_t> order(N);
  std::vector<double> sorted_w(N);
  std::vector<double> unif(N);
  for (std::size_t t = 1; t < T; ++t) {
    const double* prev = ps.particles.data() + (t - 1) * N;
    const double* prev_w = ps.norm_weights.data() + (t - 1) * N;

    std::iota(order.begin(), order.end(), std::size_t{0});
    if (options.sort_particles) {
      std::sort(order.begin(), order.end(), [prev](std::size_t a, std::size_t b) {
        return prev[a] < prev[b] || (prev[a] == prev[b] && a < b);
      });
    }
    for (std::size_t i = 0; i < N; ++i) sorted_w[i] = prev_w[order[i]];
    auto ua = u.resample_row(t - 1);
    for (std::size_t i = 0; i < N; ++i) unif[i] = normal_cdf(ua[i]);
    const auto sorted_anc = sorted_multinomial_resample(sorted_w, unif);

    std::size_t* anc = ps.ancestors.data() + (t - 1) * N;
    double* cur = ps.particles.data() + t * N;
    double* logw = ps.log_weights.data() + t * N;
    auto uh = u.state_row(t);
    const double y_prev = y[t - 1];
    const double y_prev2 = t >= 2 ? y[t - 2] : 0.0;
    const double innov = y_prev - p.phi_y * y_prev2;
    for (std::size_t i = 0; i < N; ++i) {
      const std::size_t a = order[sorted_anc[i]];
      anc[i] = a;
      const double hp = prev[a];
      const double m = p.mu_h + p.phi_h * (hp - p.mu_h) + p.rho * p.tau * std::exp(-0.5 * hp) * innov;
      cur[i] = m + sd_t * uh[i];
      logw[i] = log_obs(y[t], y_prev, cur[i]);
    }
    ps.loglik_terms[t] = normalize({logw, N}, {ps.norm_weights.data() + t * N, N}, t);
  }
  ps.loglik = std::accumulate(ps.loglik_terms.begin(), ps.loglik_terms.end(), 0.0);
  return ps;
}

LatentPath backward_simulate(const ParticleSystem& ps, std::span<const double> y,
                             const SvParams& p, std::uint64_t seed) {
  const std::size_t T = ps.T;
  const std::size_t N = ps.N;
  if (y.size() != T) throw DimensionError("observation length does not match particle system");
  Rng rng(derive_seed(seed, "backward-simulation"));

  auto draw = [&](std::span<const double> w) {
    const double u = rng.uniform();
    double acc = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      acc += w[i];
      if (u <= acc) return i;
    }
    std::size_t last = w.size() - 1;
    while (last > 0 && w[last] == 0.0) --last;
    return last;
  };

  LatentPath path;
  path.h.resize(T);
  std::size_t b = draw(ps.weight_row(T - 1));
  path.h[T - 1] = ps.particle_row(T - 1)[b];

  const double var = p.tau * p.tau * (1.0 - p.rho * p.rho);
  std::vector<double> lw(N), w(N);
  for (std::size_t t = T - 1; t-- > 0;) {
    const double next = path.h[t + 1];
    const double y_prev2 = t >= 1 ? y[t - 1] : 0.0;
    const double innov = y[t] - p.phi_y * y_prev2;
    auto parts = ps.particle_row(t);
    auto wt = ps.weight_row(t);
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < N; ++i) {
      const double hp = parts[i];
      const double mean =
          p.mu_h + p.phi_h * (hp - p.mu_h) + p.rho * p.tau * std::exp(-0.5 * hp) * innov;
      const double d = next - mean;
      lw[i] = wt[i] > 0.0 ? std::log(wt[i]) - 0.5 * d * d / var
                          : -std::numeric_limits<double>::infinity();
      m = std::max(m, lw[i]);
    }
    if (!std::isfinite(m)) throw NumericalError("all backward smoothing weights are zero at t=" +
                                                std::to_string(t + 1));
    double s = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      w[i] = std::exp(lw[i] - m);
      s += w[i];
    }
    for (double& x : w) x /= s;
    b = draw(w);
    path.h[t] = parts[b];
  }
  return path;
}

void write_binary(const ParticleSystem& ps, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  put<std::uint64_t>(out, ps.T);
  put<std::uint64_t>(out, ps.N);
  put<double>(out, ps.loglik);
  for (double v : ps.particles) put<double>(out, v);
  for (double v : ps.norm_weights) put<double>(out, v);
  for (double v : ps.log_weights) put<double>(out, v);
  for (std::size_t a : ps.ancestors) put<std::uint64_t>(out, a);
}

ParticleSystem read_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  ParticleSystem ps;
  ps.T = get<std::uint64_t>(in);
  ps.N = get<std::uint64_t>(in);
  ps.loglik = get<double>(in);
  const std::size_t n = ps.T * ps.N;
  for (auto* v : {&ps.particles, &ps.norm_weights, &ps.log_weights}) {
    v->resize(n);
    for (double& x : *v) x = get<double>(in);
  }
  ps.ancestors.resize(ps.T > 0 ? (ps.T - 1) * ps.N : 0);
  for (std::size_t& a : ps.ancestors) a = get<std::uint64_t>(in);
  ps.loglik_terms.resize(ps.T);
  std::vector<double> scratch(ps.N);
  for (std::size_t t = 0; t < ps.T; ++t) {
    ps.loglik_terms[t] = normalize({ps.log_weights.data() + t * ps.N, ps.N}, scratch, t);
  }
  return ps;
}

}  // namespace creditvol
