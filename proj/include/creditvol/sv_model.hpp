#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "creditvol/timeseries.hpp"

namespace creditvol {

// Stochastic volatility with leverage:
//
//   y_t = phi_y * y_{t-1} + exp(h_t / 2) * eps_t,                y_0 = 0
//   h_t = mu_h + phi_h * (h_{t-1} - mu_h) + tau * eta_t,          t >= 2
//   eta_t = rho * eps_{t-1} + sqrt(1 - rho^2) * eta_star_t
//   h_1 ~ N(mu_h, tau^2 / (1 - phi_h^2))
struct SvParams {
  double mu_h = 0.0;
  double phi_y = 0.0;
  double phi_h = 0.0;
  double tau = 1.0;
  double rho = 0.0;

  bool valid() const;
  // Throws ConfigError naming the offending field.
  void validate() const;

  friend bool operator==(const SvParams&, const SvParams&) = default;
};

inline constexpr const char* kSvParamNames[5] = {"mu_h", "phi_y", "phi_h", "tau", "rho"};

struct LatentPath {
  std::vector<double> h;
};

// eps has length T; eta and eta_star have length T - 1 and are indexed by
// t = 2..T (element 0 belongs to t = 2).
struct ShockSet {
  std::vector<double> eps;
  std::vector<double> eta;
  std::vector<double> eta_star;
};

enum class PriorVariant { baseline, robustness };

struct PriorSpec {
  PriorVariant variant = PriorVariant::baseline;
  // baseline: (phi + 1) / 2 ~ Beta(a0, b0) for both persistences
  double a0 = 20.0;
  double b0 = 1.5;
  // robustness: truncated normals and a normal on mu_h
  double phi_mean = 0.9;
  double phi_sd = 0.05;
  double mu_mean = 0.0;
  double mu_sd = 10.0;
  double tau_mean = 0.5;
  double tau_sd = 0.3;

  static PriorSpec baseline() { return {}; }
  static PriorSpec robustness() {
    PriorSpec s;
    s.variant = PriorVariant::robustness;
    return s;
  }
};

std::string to_string(PriorVariant v);
PriorVariant prior_variant_from_string(const std::string& s);

// log N(y_t; phi_y * y_prev, exp(h_t)).
double log_observation_density(double y_t, double y_prev, double h_t, const SvParams& p);

struct Moments {
  double mean;
  double variance;
};

// Conditional law of h_t given h_{t-1}, y_{t-1}, y_{t-2}; pass y_prev2 = 0 at t = 2.
Moments transition_moments(double h_prev, double y_prev, double y_prev2, const SvParams& p);

// Univariate prior components (log densities; -inf outside support).
double log_prior_phi(double phi, const PriorSpec& spec);
double log_prior_tau(double tau, const PriorSpec& spec);
double log_prior_mu(double mu, const PriorSpec& spec);
double log_prior_rho(double rho, const PriorSpec& spec);

// Sum of the components; -inf when p is outside the parameter space.
double log_prior(const SvParams& p, const PriorSpec& spec);

struct SvSimulation {
  TimeSeries y;
  LatentPath h;
  ShockSet shocks;
};

// `force_leverage_path` always evaluates rho * eps + sqrt(1 - rho^2) * eta_star
// even when rho == 0.
SvSimulation simulate(const SvParams& p, std::size_t T, std::uint64_t seed,
                      bool force_leverage_path = false);

ShockSet extract_shocks(std::span<const double> y, const LatentPath& h, const SvParams& p);

}  // namespace creditvol
