#include "creditvol/local_projections.hpp"

#include <cmath>
#include <fstream>

#include "creditvol/csv.hpp"
#include "creditvol/errors.hpp"
#include "creditvol/rng.hpp"

namespace creditvol {

namespace {

struct Column {
  std::string name;
  const TimeSeries* series;
  int lag;
};

}  // namespace

void LpSpec::validate() const {
  if (lag_order < 1) throw ConfigError("lag order must be at least 1");
  if (max_horizon < 0) throw ConfigError("max horizon must be non-negative");
  if (!(band_level > 0.0 && band_level < 1.0)) throw ConfigError("band level must lie in (0, 1)");
  if (regime_indicator) {
    for (double v : regime_indicator->values()) {
      if (v != 0.0 && v != 1.0) throw DataError("regime indicator must be 0/1");
    }
  }
}

std::string to_string(Regime r) {
  switch (r) {
    case Regime::linear: return "linear";
    case Regime::recession: return "recession";
    case Regime::expansion: return "expansion";
  }
  return "unknown";
}

std::string to_string(ShockKind k) { return k == ShockKind::eta_star ? "eta_star" : "eta"; }

std::vector<double> standardize_shock(std::span<const double> s) {
  if (s.size() < 2) throw DataError("shock series too short to standardize");
  double m = 0.0;
  for (double v : s) m += v;
  m /= static_cast<double>(s.size());
  double ss = 0.0;
  for (double v : s) ss += (v - m) * (v - m);
  const double sd = std::sqrt(ss / static_cast<double>(s.size() - 1));
  if (!(sd > 0.0)) throw DataError("shock series is constant");
  std::vector<double> out(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) out[i] = (s[i] - m) / sd;
  return out;
}

TimeSeries standardize_shock(const TimeSeries& s) {
  return TimeSeries(s.periods(), standardize_shock(s.values()), s.label());
}

Eigen::MatrixXd white_covariance(const Eigen::MatrixXd& X, const Eigen::VectorXd& resid) {
  return newey_west(X, resid, 0);
}

Eigen::MatrixXd newey_west(const Eigen::MatrixXd& X, const Eigen::VectorXd& resid, int lag) {
  if (lag < 0) throw ConfigError("Newey-West lag must be non-negative");
  if (X.rows() != resid.size()) throw DimensionError("design and residual lengths differ");
  const Eigen::Index n = X.rows();
  const Eigen::MatrixXd scores = X.array().colwise() * resid.array();  // row t: e_t x_t'
  Eigen::MatrixXd S = scores.transpose() * scores;
  for (int l = 1; l <= lag && l < n; ++l) {
    const double w = 1.0 - static_cast<double>(l) / static_cast<double>(lag + 1);
    const Eigen::MatrixXd G =
        scores.bottomRows(n - l).transpose() * scores.topRows(n - l);  // sum_t s_t s_{t-l}'
    S += w * (G + G.transpose());
  }
  const Eigen::MatrixXd xtx = X.transpose() * X;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(xtx);
  if (ldlt.info() != Eigen::Success) throw NumericalError("X'X is not invertible");
  const Eigen::MatrixXd inv = ldlt.solve(Eigen::MatrixXd::Identity(X.cols(), X.cols()));
  return inv * S * inv;
}

OlsFit ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
           const std::vector<std::string>& names) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  qr.setThreshold(1e-10);
  if (qr.rank() < X.cols()) {
    // Each trailing pivot column is a combination of the leading ones:
    // R11 c = R12. Report it with the columns that carry weight in c.
    const Eigen::Index r = qr.rank();
    const Eigen::MatrixXd R = qr.matrixR().topLeftCorner(X.cols(), X.cols()).triangularView<Eigen::Upper>();
    const auto& perm = qr.colsPermutation().indices();
    auto name = [&](Eigen::Index k) {
      const auto j = static_cast<std::size_t>(perm(k));
      return j < names.size() ? names[j] : "column " + std::to_string(j);
    };
    std::string groups;
    for (Eigen::Index k = r; k < X.cols(); ++k) {
      const Eigen::VectorXd c =
          R.topLeftCorner(r, r).triangularView<Eigen::Upper>().solve(R.block(0, k, r, 1));
      std::string g = name(k);
      for (Eigen::Index i = 0; i < r; ++i) {
        if (std::abs(c(i)) > 1e-8) g += ", " + name(i);
      }
      if (!groups.empty()) groups += "; ";
      groups += "{" + g + "}";
    }
    throw DataError("design matrix is rank deficient; collinear columns: " + groups);
  }
  OlsFit fit;
  fit.coef = qr.solve(y);
  fit.resid = y - X * fit.coef;
  return fit;
}

LpResult run_lp(const TimeSeries& x, const LpSpec& spec, const TimeSeries& shock_raw) {
  spec.validate();
  const TimeSeries shock = standardize_shock(shock_raw);
  const double z = normal_quantile(0.5 + spec.band_level / 2.0);
  const bool state_dependent = spec.regime_indicator.has_value();

  std::vector<Column> base{{"const", nullptr, 0}};
  for (const auto& c : spec.controls) {
    for (int l = 1; l <= spec.lag_order; ++l) {
      base.push_back({c.name + "_lag" + std::to_string(l), &c.series, l});
    }
  }
  if (spec.include_outcome_lags) {
    for (int l = 1; l <= spec.lag_order; ++l) {
      base.push_back({"outcome_lag" + std::to_string(l), &x, l});
    }
  }
  base.push_back({"shock", &shock, 0});
  const std::size_t shock_col = base.size() - 1;

  LpResult result;
  for (int h = 0; h <= spec.max_horizon; ++h) {
    // Rows: periods t with every regressor and x_{t+h} available.
    std::vector<double> yv;
    std::vector<std::vector<double>> rows;
    std::vector<int> regime;  // 1 recession, 0 expansion
    for (std::size_t i = 0; i < shock.size(); ++i) {
      const Period t = shock.period(i);
      const double* target = x.at(t + h);
      if (!target) continue;
      std::vector<double> r(base.size());
      bool ok = true;
      for (std::size_t j = 0; j < base.size() && ok; ++j) {
        if (!base[j].series) {
          r[j] = 1.0;
          continue;
        }
        const double* v = base[j].series->at(t - base[j].lag);
        if (v) r[j] = *v; else ok = false;
      }
      int state = 1;
      if (ok && state_dependent) {
        const double* ind = spec.regime_indicator->at(t - 1);
        if (ind) state = *ind == 1.0 ? 1 : 0; else ok = false;
      }
      if (!ok) continue;
      yv.push_back(*target);
      rows.push_back(std::move(r));
      regime.push_back(state);
    }

    std::vector<Regime> blocks;
    std::size_t n_rec = 0;
    for (int s : regime) n_rec += static_cast<std::size_t>(s);
    const std::size_t n_exp = regime.size() - n_rec;
    const std::size_t k = base.size();
    if (!state_dependent) {
      blocks.push_back(Regime::linear);
    } else {
      if (n_rec > k) blocks.push_back(Regime::recession);
      else if (n_rec > 0) result.warnings.push_back("h=" + std::to_string(h) + ": recession regime has too few observations; dropped");
      if (n_exp > k) blocks.push_back(Regime::expansion);
      else if (n_exp > 0) result.warnings.push_back("h=" + std::to_string(h) + ": expansion regime has too few observations; dropped");
    }
    const std::size_t p = k * blocks.size();
    if (blocks.empty() || rows.size() <= p) {
      result.warnings.push_back("insufficient observations at h=" + std::to_string(h) +
                                "; result truncated");
      break;
    }

    const auto n = static_cast<Eigen::Index>(rows.size());
    Eigen::MatrixXd X = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(p));
    Eigen::VectorXd Y(n);
    std::vector<std::string> names;
    for (Regime b : blocks) {
      for (const auto& c : base) {
        names.push_back(state_dependent ? c.name + "[" + to_string(b) + "]" : c.name);
      }
    }
    // Samples where the indicator places the row in a dropped regime are discarded.
    std::vector<Eigen::Index> keep;
    for (Eigen::Index r = 0; r < n; ++r) {
      for (std::size_t b = 0; b < blocks.size(); ++b) {
        const bool in_block = blocks[b] == Regime::linear ||
                              (blocks[b] == Regime::recession) == (regime[static_cast<std::size_t>(r)] == 1);
        if (!in_block) continue;
        for (std::size_t j = 0; j < k; ++j) {
          X(r, static_cast<Eigen::Index>(b * k + j)) = rows[static_cast<std::size_t>(r)][j];
        }
        keep.push_back(r);
      }
      Y(r) = yv[static_cast<std::size_t>(r)];
    }
    if (static_cast<Eigen::Index>(keep.size()) != n) {
      Eigen::MatrixXd Xk(static_cast<Eigen::Index>(keep.size()), X.cols());
      Eigen::VectorXd Yk(static_cast<Eigen::Index>(keep.size()));
      for (std::size_t i = 0; i < keep.size(); ++i) {
        Xk.row(static_cast<Eigen::Index>(i)) = X.row(keep[i]);
        Yk(static_cast<Eigen::Index>(i)) = Y(keep[i]);
      }
      X = std::move(Xk);
      Y = std::move(Yk);
    }

    const OlsFit fit = ols(X, Y, names);
    const Eigen::MatrixXd V = newey_west(X, fit.resid, h);
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      const auto j = static_cast<Eigen::Index>(b * k + shock_col);
      const double beta = fit.coef(j);
      const double se = std::sqrt(V(j, j));
      std::size_t nobs = static_cast<std::size_t>(X.rows());
      if (blocks[b] == Regime::recession) nobs = n_rec;
      if (blocks[b] == Regime::expansion) nobs = n_exp;
      result.rows.push_back({h, blocks[b], beta, se, beta - z * se, beta + z * se, nobs});
    }
  }
  return result;
}

void write_lp_csv(const std::string& path, const LpResult& r) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << "h,regime,beta,se,lo,hi,n_obs\n";
  for (const auto& row : r.rows) {
    out << row.horizon << "," << to_string(row.regime) << "," << csv::format_number(row.beta)
        << "," << csv::format_number(row.se) << "," << csv::format_number(row.lo) << ","
        << csv::format_number(row.hi) << "," << row.n_obs << "\n";
  }
}

}  // namespace creditvol
