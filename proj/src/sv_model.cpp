#include "creditvol/sv_model.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "creditvol/errors.hpp"
#include "creditvol/rng.hpp"

namespace creditvol {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kLogSqrt2Pi = 0.91893853320467274178;  // 0.5 * log(2 pi)

double log_normal_pdf(double x, double m, double sd) {
  const double z = (x - m) / sd;
  return -kLogSqrt2Pi - std::log(sd) - 0.5 * z * z;
}

// log of P(lo < X < hi) for X ~ N(m, sd^2)
double log_normal_mass(double m, double sd, double lo, double hi) {
  return std::log(normal_cdf((hi - m) / sd) - normal_cdf((lo - m) / sd));
}

double log_beta_fn(double a, double b) {
  return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

}  // namespace

bool SvParams::valid() const {
  return std::isfinite(mu_h) && std::abs(phi_y) < 1.0 && std::abs(phi_h) < 1.0 && tau > 0.0 &&
         std::isfinite(tau) && std::abs(rho) < 1.0;
}

void SvParams::validate() const {
  if (!std::isfinite(mu_h)) throw ConfigError("mu_h must be finite");
  if (!(std::abs(phi_y) < 1.0)) throw ConfigError("phi_y must lie in (-1, 1)");
  if (!(std::abs(phi_h) < 1.0)) throw ConfigError("phi_h must lie in (-1, 1)");
  if (!(tau > 0.0) || !std::isfinite(tau)) throw ConfigError("tau must be positive");
  if (!(std::abs(rho) < 1.0)) throw ConfigError("rho must lie in (-1, 1)");
}

std::string to_string(PriorVariant v) {
  return v == PriorVariant::baseline ? "baseline" : "robustness";
}

PriorVariant prior_variant_from_string(const std::string& s) {
  if (s == "baseline") return PriorVariant::baseline;
  if (s == "robustness") return PriorVariant::robustness;
  throw ConfigError("unknown prior variant '" + s + "'");
}

double log_observation_density(double y_t, double y_prev, double h_t, const SvParams& p) {
  const double e = y_t - p.phi_y * y_prev;
  return -kLogSqrt2Pi - 0.5 * h_t - 0.5 * e * e * std::exp(-h_t);
}

Moments transition_moments(double h_prev, double y_prev, double y_prev2, const SvParams& p) {
  const double eps_prev = std::exp(-0.5 * h_prev) * (y_prev - p.phi_y * y_prev2);
  return {p.mu_h + p.phi_h * (h_prev - p.mu_h) + p.rho * p.tau * eps_prev,
          p.tau * p.tau * (1.0 - p.rho * p.rho)};
}

double log_prior_phi(double phi, const PriorSpec& s) {
  if (s.variant == PriorVariant::baseline) {
    if (!(phi > -1.0 && phi < 1.0)) return kNegInf;
    return -std::log(2.0) - log_beta_fn(s.a0, s.b0) + (s.a0 - 1.0) * std::log((1.0 + phi) / 2.0) +
           (s.b0 - 1.0) * std::log((1.0 - phi) / 2.0);
  }
  if (!(phi > 0.0 && phi < 1.0)) return kNegInf;
  return log_normal_pdf(phi, s.phi_mean, s.phi_sd) - log_normal_mass(s.phi_mean, s.phi_sd, 0.0, 1.0);
}

double log_prior_tau(double tau, const PriorSpec& s) {
  if (s.variant == PriorVariant::baseline) {
    // half-Cauchy, p(tau) = 2 / (pi (1 + tau^2)) on [0, inf)
    if (!(tau >= 0.0) || !std::isfinite(tau)) return kNegInf;
    return std::log(2.0 / std::numbers::pi) - std::log1p(tau * tau);
  }
  if (!(tau > 0.0) || !std::isfinite(tau)) return kNegInf;
  return log_normal_pdf(tau, s.tau_mean, s.tau_sd) -
         log_normal_mass(s.tau_mean, s.tau_sd, 0.0, std::numeric_limits<double>::infinity());
}

double log_prior_mu(double mu, const PriorSpec& s) {
  if (!std::isfinite(mu)) return kNegInf;
  if (s.variant == PriorVariant::baseline) return 0.0;  // flat, improper
  return log_normal_pdf(mu, s.mu_mean, s.mu_sd);
}

double log_prior_rho(double rho, const PriorSpec&) {
  if (!(rho > -1.0 && rho < 1.0)) return kNegInf;
  return -std::log(2.0);
}

double log_prior(const SvParams& p, const PriorSpec& spec) {
  if (!p.valid()) return kNegInf;
  return log_prior_mu(p.mu_h, spec) + log_prior_phi(p.phi_y, spec) +
         log_prior_phi(p.phi_h, spec) + log_prior_tau(p.tau, spec) + log_prior_rho(p.rho, spec);
}

SvSimulation simulate(const SvParams& p, std::size_t T, std::uint64_t seed,
                      bool force_leverage_path) {
  p.validate();
  if (T < 2) throw ConfigError("simulate needs T >= 2");
  Rng rng(derive_seed(seed, "sv-simulate"));
  std::vector<double> y(T), h(T);
  ShockSet s;
  s.eps.resize(T);
  s.eta.resize(T - 1);
  s.eta_star.resize(T - 1);

  const double sd1 = p.tau / std::sqrt(1.0 - p.phi_h * p.phi_h);
  h[0] = p.mu_h + sd1 * rng.normal();
  s.eps[0] = rng.normal();
  y[0] = std::exp(0.5 * h[0]) * s.eps[0];
  const double sq = std::sqrt(1.0 - p.rho * p.rho);
  for (std::size_t t = 1; t < T; ++t) {
    const double es = rng.normal();
    s.eta_star[t - 1] = es;
    s.eta[t - 1] = (p.rho != 0.0 || force_leverage_path) ? p.rho * s.eps[t - 1] + sq * es : es;
    h[t] = p.mu_h + p.phi_h * (h[t - 1] - p.mu_h) + p.tau * s.eta[t - 1];
    s.eps[t] = rng.normal();
    y[t] = p.phi_y * y[t - 1] + std::exp(0.5 * h[t]) * s.eps[t];
  }
  return {TimeSeries::from_values(std::move(y), 0, "y"), LatentPath{std::move(h)}, std::move(s)};
}

ShockSet extract_shocks(std::span<const double> y, const LatentPath& path, const SvParams& p) {
  p.validate();
  const auto& h = path.h;
  if (y.size() != h.size()) throw DimensionError("observation and latent path lengths differ");
  const std::size_t T = y.size();
  ShockSet s;
  s.eps.resize(T);
  for (std::size_t t = 0; t < T; ++t) {
    const double y_prev = t == 0 ? 0.0 : y[t - 1];
    s.eps[t] = std::exp(-0.5 * h[t]) * (y[t] - p.phi_y * y_prev);
  }
  if (T < 2) return s;
  s.eta.resize(T - 1);
  s.eta_star.resize(T - 1);
  const double sq = std::sqrt(1.0 - p.rho * p.rho);
  for (std::size_t t = 1; t < T; ++t) {
    const double eta = (h[t] - p.mu_h - p.phi_h * (h[t - 1] - p.mu_h)) / p.tau;
    s.eta[t - 1] = eta;
    s.eta_star[t - 1] = (eta - p.rho * s.eps[t - 1]) / sq;
  }
  return s;
}

}  // namespace creditvol
