#include "creditvol/pmmh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "creditvol/errors.hpp"
#include "creditvol/rng.hpp"

namespace creditvol {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kCovarianceRidge = 1e-8;

Eigen::VectorXd to_eigen(const Unconstrained& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Unconstrained from_eigen(const Eigen::VectorXd& x) {
  Unconstrained v{};
  for (std::size_t k = 0; k < v.size(); ++k) v[k] = x(static_cast<Eigen::Index>(k));
  return v;
}

class SvParticleEstimator final : public LikelihoodEstimator {
 public:
  SvParticleEstimator(std::span<const double> y, const ChainConfig& cfg)
      : y_(y),
        cfg_(cfg),
        ustar_key_(derive_seed(cfg.seed, "u-star")),
        backward_key_(derive_seed(cfg.seed, "backward")) {}

  double initialize(const Eigen::VectorXd& x) override {
    const SvParams p = inverse_transform(from_eigen(x));
    current_u_ = make_seed_block(y_.size(), cfg_.particles, derive_seed(cfg_.seed, "u-initial"));
    // A failure here propagates: there is no chain state to fall back on.
    const ParticleSystem ps = correlated_pf(y_, p, current_u_, cfg_.particles);
    current_path_ = backward_simulate(ps, y_, p, derive_seed(backward_key_, std::uint64_t{0}));
    return ps.loglik;
  }

  double propose(const Eigen::VectorXd& x, std::size_t iteration) override {
    proposed_params_ = inverse_transform(from_eigen(x));
    const std::uint64_t s = derive_seed(ustar_key_, iteration);
    proposed_u_ = cfg_.variant == SamplerVariant::correlated
                      ? correlate_seed(current_u_, cfg_.gamma, s)
                      : make_seed_block(y_.size(), cfg_.particles, s);
    try {
      proposed_ps_ = correlated_pf(y_, proposed_params_, proposed_u_, cfg_.particles);
    } catch (const NumericalError&) {
      ++failures_;
      return kNegInf;
    }
    return proposed_ps_.loglik;
  }

  void accept(std::size_t iteration) override {
    current_u_ = std::move(proposed_u_);
    current_path_ =
        backward_simulate(proposed_ps_, y_, proposed_params_, derive_seed(backward_key_, iteration));
  }

  const LatentPath& current_path() const { return current_path_; }
  std::size_t failures() const { return failures_; }

 private:
  std::span<const double> y_;
  const ChainConfig& cfg_;
  std::uint64_t ustar_key_;
  std::uint64_t backward_key_;
  SeedBlock current_u_;
  SeedBlock proposed_u_;
  SvParams proposed_params_;
  ParticleSystem proposed_ps_;
  LatentPath current_path_;
  std::size_t failures_ = 0;
};

}  // namespace

double garthwaite_steplength(double target, std::size_t dim) {
  const double d = static_cast<double>(dim);
  const double a = -normal_quantile(target / 2.0);
  return (1.0 - 1.0 / d) * std::sqrt(2.0 * std::numbers::pi) * std::exp(a * a / 2.0) / (2.0 * a) +
         1.0 / (d * target * (1.0 - target));
}

double adapt_scale(double scale, bool accepted, std::size_t iteration, double target,
                   double steplength) {
  const double step = steplength * ((accepted ? 1.0 : 0.0) - target) /
                      static_cast<double>(std::max<std::size_t>(iteration, 1));
  return std::exp(std::log(scale) + step);
}

double adapt_scale(double scale, bool accepted, std::size_t iteration, double target) {
  return adapt_scale(scale, accepted, iteration, target, garthwaite_steplength(target, 5));
}

double acceptance_probability(double ll_prop, double lp_prop, double ll_cur, double lp_cur) {
  const double num = ll_prop + lp_prop;
  if (!(num > kNegInf)) return 0.0;
  const double log_ratio = num - (ll_cur + lp_cur);
  return log_ratio >= 0.0 ? 1.0 : std::exp(log_ratio);
}

AdaptiveMhTrace run_adaptive_mh(const Eigen::VectorXd& initial,
                                const std::function<double(const Eigen::VectorXd&)>& log_prior,
                                LikelihoodEstimator& estimator, const AdaptiveMhConfig& cfg,
                                const std::function<void(std::size_t)>& on_retained) {
  if (cfg.burn_in >= cfg.iterations) throw ConfigError("burn_in must be smaller than iterations");
  if (!(cfg.target_accept > 0.0 && cfg.target_accept < 1.0)) {
    throw ConfigError("target acceptance must lie in (0, 1)");
  }
  const auto d = initial.size();
  AdaptiveMhTrace trace;
  trace.steplength = garthwaite_steplength(cfg.target_accept, static_cast<std::size_t>(d));
  trace.accept_trace.reserve(cfg.iterations);
  trace.scale_trace.reserve(cfg.iterations);
  trace.states.reserve(cfg.iterations - cfg.burn_in);
  trace.logliks.reserve(cfg.iterations - cfg.burn_in);

  Rng proposal_rng(derive_seed(cfg.seed, "proposal"));
  Rng accept_rng(derive_seed(cfg.seed, "accept"));

  Eigen::VectorXd x = initial;
  double lp = log_prior(x);
  if (!(lp > kNegInf)) throw ConfigError("initial point has zero prior density");
  double ll = estimator.initialize(x);
  if (!(ll > kNegInf)) throw NumericalError("likelihood estimate at the initial point is zero");

  double scale = cfg.initial_scale;
  Eigen::MatrixXd chol = Eigen::MatrixXd::Identity(d, d);
  Eigen::VectorXd sum = x;
  Eigen::MatrixXd outer = x * x.transpose();
  std::size_t visited = 1;
  Eigen::VectorXd z(d);

  for (std::size_t it = 1; it <= cfg.iterations; ++it) {
    if (it > cfg.identity_phase && (it - 1 - cfg.identity_phase) % cfg.covariance_refresh == 0) {
      const double n = static_cast<double>(visited);
      const Eigen::VectorXd m = sum / n;
      Eigen::MatrixXd cov = (outer - n * m * m.transpose()) / (n - 1.0);
      cov.diagonal().array() += kCovarianceRidge;
      Eigen::LLT<Eigen::MatrixXd> llt(cov);
      if (llt.info() == Eigen::Success) chol = llt.matrixL();
    }

    for (Eigen::Index k = 0; k < d; ++k) z(k) = proposal_rng.normal();
    const Eigen::VectorXd xp = x + scale * (chol * z);
    const double u = accept_rng.uniform();  // one draw per iteration, always

    const double lpp = log_prior(xp);
    double llp = kNegInf;
    if (lpp > kNegInf) {
      llp = estimator.propose(xp, it);
      if (!(llp > kNegInf)) ++trace.failures;
    }
    const bool accepted = u < acceptance_probability(llp, lpp, ll, lp);

    trace.scale_trace.push_back(scale);
    trace.accept_trace.push_back(accepted ? 1 : 0);
    if (accepted) {
      estimator.accept(it);
      x = xp;
      lp = lpp;
      ll = llp;
    }
    scale = adapt_scale(scale, accepted, it, cfg.target_accept, trace.steplength);

    sum += x;
    outer += x * x.transpose();
    ++visited;

    if (it > cfg.burn_in) {
      trace.states.push_back(x);
      trace.logliks.push_back(ll);
      if (on_retained) on_retained(trace.states.size() - 1);
    }
  }
  return trace;
}

Unconstrained transform_params(const SvParams& p) {
  p.validate();
  return {p.mu_h, std::atanh(p.phi_y), std::atanh(p.phi_h), std::log(p.tau), std::atanh(p.rho)};
}

SvParams inverse_transform(const Unconstrained& v) {
  for (double x : v) {
    if (!std::isfinite(x)) throw ConfigError("non-finite unconstrained parameter");
  }
  return {v[0], std::tanh(v[1]), std::tanh(v[2]), std::exp(v[3]), std::tanh(v[4])};
}

double log_jacobian(const Unconstrained& v) {
  auto log_dtanh = [](double a) {
    // log(1 - tanh(a)^2) = log 4 - 2 |a| - 2 log(1 + exp(-2 |a|))
    const double b = std::abs(a);
    return std::log(4.0) - 2.0 * b - 2.0 * std::log1p(std::exp(-2.0 * b));
  };
  return log_dtanh(v[1]) + log_dtanh(v[2]) + v[3] + log_dtanh(v[4]);
}

void ChainConfig::validate() const {
  if (burn_in >= iterations) throw ConfigError("burn_in must be smaller than iterations");
  if (particles < 2) throw ConfigError("particles must be at least 2");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("gamma must lie in [0, 1]");
  if (!(target_accept > 0.0 && target_accept < 1.0)) {
    throw ConfigError("target acceptance must lie in (0, 1)");
  }
  if (!(initial_scale > 0.0)) throw ConfigError("initial scale must be positive");
  if (covariance_refresh == 0) throw ConfigError("covariance refresh interval must be positive");
  if (initial) initial->validate();
}

double PosteriorDraws::acceptance_rate() const {
  if (accept_trace.empty()) return 0.0;
  double s = 0.0;
  for (auto a : accept_trace) s += a;
  return s / static_cast<double>(accept_trace.size());
}

double PosteriorDraws::post_burn_in_acceptance_rate() const {
  if (accept_trace.size() <= burn_in) return 0.0;
  double s = 0.0;
  for (std::size_t i = burn_in; i < accept_trace.size(); ++i) s += accept_trace[i];
  return s / static_cast<double>(accept_trace.size() - burn_in);
}

SvParams default_initial_params(std::span<const double> y) {
  const double n = static_cast<double>(y.size());
  double m = 0.0;
  for (double v : y) m += v;
  m /= n;
  double c0 = 0.0, c1 = 0.0;
  for (std::size_t t = 0; t < y.size(); ++t) {
    c0 += (y[t] - m) * (y[t] - m);
    if (t > 0) c1 += (y[t] - m) * (y[t - 1] - m);
  }
  SvParams p;
  p.phi_y = c0 > 0.0 ? std::clamp(c1 / c0, -0.9, 0.95) : 0.0;
  const double innovation_var = (c0 / n) * (1.0 - p.phi_y * p.phi_y);
  p.mu_h = std::log(std::max(innovation_var, 1e-300));
  p.phi_h = 0.9;
  p.tau = 0.3;
  p.rho = 0.0;
  return p;
}

PosteriorDraws run_chain(std::span<const double> y, const ChainConfig& cfg) {
  cfg.validate();
  if (y.size() < 2) throw DataError("need at least two observations");
  const SvParams init = cfg.initial.value_or(default_initial_params(y));
  init.validate();

  SvParticleEstimator estimator(y, cfg);
  const PriorSpec prior = cfg.prior;
  auto log_prior_fn = [&prior](const Eigen::VectorXd& x) {
    const Unconstrained v = from_eigen(x);
    for (double a : v) {
      if (!std::isfinite(a)) return kNegInf;
    }
    const SvParams p = inverse_transform(v);
    // tanh saturates to exactly +-1 for large arguments
    if (!p.valid()) return kNegInf;
    return log_prior(p, prior) + log_jacobian(v);
  };

  AdaptiveMhConfig mh;
  mh.iterations = cfg.iterations;
  mh.burn_in = cfg.burn_in;
  mh.target_accept = cfg.target_accept;
  mh.seed = cfg.seed;
  mh.initial_scale = cfg.initial_scale;
  mh.identity_phase = cfg.identity_phase;
  mh.covariance_refresh = cfg.covariance_refresh;

  PosteriorDraws out;
  out.burn_in = cfg.burn_in;
  auto keep_path = [&](std::size_t k) {
    if (cfg.path_thin > 0 && k % cfg.path_thin == 0) {
      out.latent_paths.push_back(estimator.current_path());
      out.path_draw_index.push_back(k);
    }
  };
  AdaptiveMhTrace trace =
      run_adaptive_mh(to_eigen(transform_params(init)), log_prior_fn, estimator, mh, keep_path);

  out.params.reserve(trace.states.size());
  for (const auto& x : trace.states) out.params.push_back(inverse_transform(from_eigen(x)));
  out.logliks = std::move(trace.logliks);
  out.accept_trace = std::move(trace.accept_trace);
  out.scale_trace = std::move(trace.scale_trace);
  out.filter_failures = estimator.failures();
  out.steplength = trace.steplength;
  return out;
}

PosteriorSummary summarize(const PosteriorDraws& d) {
  if (d.params.size() < 100) throw DataError("summary needs at least 100 retained draws");
  PosteriorSummary s;
  s.draws = d.params.size();
  std::vector<double> col(d.params.size());
  const std::array<double SvParams::*, 5> fields = {&SvParams::mu_h, &SvParams::phi_y,
                                                    &SvParams::phi_h, &SvParams::tau,
                                                    &SvParams::rho};
  for (std::size_t k = 0; k < fields.size(); ++k) {
    for (std::size_t i = 0; i < d.params.size(); ++i) col[i] = d.params[i].*fields[k];
    s.params[k] = summarize_series(col);
  }
  s.acceptance_rate = d.acceptance_rate();
  s.post_burn_in_acceptance_rate = d.post_burn_in_acceptance_rate();
  return s;
}

LatentPath posterior_mean_path(const PosteriorDraws& d) {
  if (d.latent_paths.empty()) throw DataError("no latent paths were stored");
  LatentPath m;
  m.h.assign(d.latent_paths.front().h.size(), 0.0);
  for (const auto& p : d.latent_paths) {
    for (std::size_t t = 0; t < m.h.size(); ++t) m.h[t] += p.h[t];
  }
  for (double& v : m.h) v /= static_cast<double>(d.latent_paths.size());
  return m;
}

SvParams posterior_mean_params(const PosteriorDraws& d) {
  if (d.params.empty()) throw DataError("no retained draws");
  SvParams m{0.0, 0.0, 0.0, 0.0, 0.0};
  for (const auto& p : d.params) {
    m.mu_h += p.mu_h;
    m.phi_y += p.phi_y;
    m.phi_h += p.phi_h;
    m.tau += p.tau;
    m.rho += p.rho;
  }
  const double n = static_cast<double>(d.params.size());
  return {m.mu_h / n, m.phi_y / n, m.phi_h / n, m.tau / n, m.rho / n};
}

}  // namespace creditvol
