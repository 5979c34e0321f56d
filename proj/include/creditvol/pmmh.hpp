#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "creditvol/diagnostics.hpp"
#include "creditvol/particle_filter.hpp"
#include "creditvol/sv_model.hpp"

namespace creditvol {

// ---------------------------------------------------------------------------
// Generic adaptive random-walk pseudo-marginal Metropolis-Hastings.

// A (possibly noisy) log-likelihood estimator with auxiliary state u.
class LikelihoodEstimator {
 public:
  virtual ~LikelihoodEstimator() = default;
  // Draws the initial auxiliary state and estimates at x. Throws on failure.
  virtual double initialize(const Eigen::VectorXd& x) = 0;
  // Draws u' for `iteration` and estimates at x'. Returns -inf on failure.
  virtual double propose(const Eigen::VectorXd& x, std::size_t iteration) = 0;
  // Makes the most recent proposal (x', u') current.
  virtual void accept(std::size_t iteration) = 0;
};

struct AdaptiveMhConfig {
  std::size_t iterations = 15000;
  std::size_t burn_in = 5000;
  double target_accept = 0.25;
  std::uint64_t seed = 1;
  double initial_scale = 0.1;
  // Identity proposal covariance until this iteration, then the empirical
  // covariance of the chain, refreshed every `covariance_refresh` iterations.
  std::size_t identity_phase = 500;
  std::size_t covariance_refresh = 100;
};

struct AdaptiveMhTrace {
  std::vector<Eigen::VectorXd> states;  // retained draws
  std::vector<double> logliks;          // retained draws
  std::vector<std::uint8_t> accept_trace;  // every iteration
  std::vector<double> scale_trace;         // scale used at every iteration
  std::size_t failures = 0;
  double steplength = 0.0;
};

// Robbins-Monro steplength constant for a d-dimensional random walk
// targeting acceptance rate `target`:
//   c = (1 - 1/d) * sqrt(2 pi) * exp(a^2 / 2) / (2 a) + 1 / (d p (1 - p)),
//   a = -Phi^{-1}(p / 2).
double garthwaite_steplength(double target, std::size_t dim);

// log s <- log s + c * (accepted - target) / max(iteration, 1)
double adapt_scale(double scale, bool accepted, std::size_t iteration, double target,
                   double steplength);
double adapt_scale(double scale, bool accepted, std::size_t iteration, double target);

// min(1, exp(num - den)) with num/den = log-likelihood + log-prior.
double acceptance_probability(double loglik_proposed, double logprior_proposed,
                              double loglik_current, double logprior_current);

// `log_prior` is the log prior density on the sampling space (including any
// Jacobian). `on_retained(k)` is called after retained draw k is recorded.
AdaptiveMhTrace run_adaptive_mh(const Eigen::VectorXd& initial,
                                const std::function<double(const Eigen::VectorXd&)>& log_prior,
                                LikelihoodEstimator& estimator, const AdaptiveMhConfig& config,
                                const std::function<void(std::size_t)>& on_retained = {});

// ---------------------------------------------------------------------------
// SV-with-leverage PMMH.

// (mu_h, atanh phi_y, atanh phi_h, log tau, atanh rho)
using Unconstrained = std::array<double, 5>;

Unconstrained transform_params(const SvParams& p);
SvParams inverse_transform(const Unconstrained& v);
// log |d params / d v|
double log_jacobian(const Unconstrained& v);

enum class SamplerVariant { standard, correlated };

struct ChainConfig {
  std::size_t iterations = 15000;
  std::size_t burn_in = 5000;
  std::size_t particles = 100;
  double gamma = 0.99;
  double target_accept = 0.25;
  std::uint64_t seed = 1;
  PriorSpec prior;
  SamplerVariant variant = SamplerVariant::correlated;
  std::optional<SvParams> initial;
  double initial_scale = 0.1;
  std::size_t identity_phase = 500;
  std::size_t covariance_refresh = 100;
  // Keep the latent path of every `path_thin`-th retained draw (0: none).
  std::size_t path_thin = 10;

  void validate() const;
};

struct PosteriorDraws {
  std::vector<SvParams> params;
  std::vector<double> logliks;
  std::vector<LatentPath> latent_paths;
  std::vector<std::size_t> path_draw_index;  // retained-draw index of each stored path
  std::vector<std::uint8_t> accept_trace;
  std::vector<double> scale_trace;
  std::size_t burn_in = 0;
  std::size_t filter_failures = 0;
  double steplength = 0.0;

  double acceptance_rate() const;
  double post_burn_in_acceptance_rate() const;
};

// Starting point derived from the data: log sample variance, lag-1
// autocorrelation, phi_h = 0.9, tau = 0.3, rho = 0.
SvParams default_initial_params(std::span<const double> y);

PosteriorDraws run_chain(std::span<const double> y, const ChainConfig& config);

struct PosteriorSummary {
  std::array<SeriesSummary, 5> params;
  double acceptance_rate = 0.0;
  double post_burn_in_acceptance_rate = 0.0;
  std::size_t draws = 0;
};

// Requires at least 100 retained draws.
PosteriorSummary summarize(const PosteriorDraws& d);

// Pointwise posterior-mean log-volatility over the stored paths.
LatentPath posterior_mean_path(const PosteriorDraws& d);
SvParams posterior_mean_params(const PosteriorDraws& d);

}  // namespace creditvol
