#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "creditvol/timeseries.hpp"

namespace creditvol {

enum class ShockKind { eta_star, eta };

struct NamedSeries {
  std::string name;
  TimeSeries series;
};

// x_{t+h} = a_h + sum_{l=1..L} psi_{h,l}' z_{t-l} + beta_h * shock_t + e_{t+h}
//
// With a regime indicator I, every coefficient is split by I_{t-1} and
// 1 - I_{t-1}. The indicator series is supplied undelayed; the lag is
// applied here.
struct LpSpec {
  int max_horizon = 12;
  int lag_order = 2;
  std::vector<NamedSeries> controls;
  bool include_outcome_lags = true;
  ShockKind shock_kind = ShockKind::eta_star;
  std::optional<TimeSeries> regime_indicator;
  double band_level = 0.68;

  void validate() const;
};

enum class Regime { linear, recession, expansion };
std::string to_string(Regime r);
std::string to_string(ShockKind k);

struct LpRow {
  int horizon;
  Regime regime;
  double beta;
  double se;
  double lo;
  double hi;
  std::size_t n_obs;
};

struct LpResult {
  std::vector<LpRow> rows;
  std::vector<std::string> warnings;
};

// Mean zero, unit sample variance (n - 1 denominator).
std::vector<double> standardize_shock(std::span<const double> s);
TimeSeries standardize_shock(const TimeSeries& s);

// Heteroskedasticity-robust (HC0) sandwich.
Eigen::MatrixXd white_covariance(const Eigen::MatrixXd& X, const Eigen::VectorXd& resid);

// Bartlett-kernel HAC sandwich (X'X)^{-1} S (X'X)^{-1} with
// S = sum_t e_t^2 x_t x_t' + sum_{l=1..lag} (1 - l/(lag+1)) sum_t e_t e_{t-l} (x_t x_{t-l}' + x_{t-l} x_t').
Eigen::MatrixXd newey_west(const Eigen::MatrixXd& X, const Eigen::VectorXd& resid, int lag);

struct OlsFit {
  Eigen::VectorXd coef;
  Eigen::VectorXd resid;
};

// Least squares via column-pivoted QR. Throws DataError naming the dependent
// columns when X is rank deficient.
OlsFit ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
           const std::vector<std::string>& column_names = {});

// One regression per horizon 0..max_horizon with Newey-West lag = h. The
// shock is standardized over its full sample first.
LpResult run_lp(const TimeSeries& x, const LpSpec& spec, const TimeSeries& shock);

void write_lp_csv(const std::string& path, const LpResult& r);

}  // namespace creditvol
