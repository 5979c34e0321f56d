#include "creditvol/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "creditvol/errors.hpp"

namespace creditvol {

double quantile(std::span<const double> values, double p) {
  if (values.empty()) throw DataError("quantile of an empty sample");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  const double pos = p * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return v[lo] + frac * (v[hi] - v[lo]);
}

double integrated_autocorrelation_time(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n < 2) return std::numeric_limits<double>::quiet_NaN();
  const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  if (*lo == *hi) return std::numeric_limits<double>::quiet_NaN();
  double m = 0.0;
  for (double v : x) m += v;
  m /= static_cast<double>(n);
  double c0 = 0.0;
  for (double v : x) c0 += (v - m) * (v - m);
  c0 /= static_cast<double>(n);
  if (c0 == 0.0) return std::numeric_limits<double>::quiet_NaN();

  auto autocorr = [&](std::size_t lag) {
    double c = 0.0;
    for (std::size_t t = 0; t + lag < n; ++t) c += (x[t] - m) * (x[t + lag] - m);
    return c / static_cast<double>(n) / c0;
  };
  // Sum pairs Gamma_k = rho_{2k} + rho_{2k+1} while positive, and keep the
  // running minimum so the sequence is monotone.
  double tau = -1.0;
  double prev_pair = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; 2 * k + 1 < n; ++k) {
    double pair = autocorr(2 * k) + autocorr(2 * k + 1);
    if (pair <= 0.0) break;
    pair = std::min(pair, prev_pair);
    prev_pair = pair;
    tau += 2.0 * pair;
  }
  return std::max(tau, 1.0 / static_cast<double>(n));
}

SeriesSummary summarize_series(std::span<const double> x) {
  if (x.empty()) throw DataError("cannot summarize an empty chain");
  SeriesSummary s;
  s.n = x.size();
  for (double v : x) s.mean += v;
  s.mean /= static_cast<double>(s.n);
  double ss = 0.0;
  for (double v : x) ss += (v - s.mean) * (v - s.mean);
  s.sd = s.n > 1 ? std::sqrt(ss / static_cast<double>(s.n - 1)) : 0.0;
  s.q025 = quantile(x, 0.025);
  s.q05 = quantile(x, 0.05);
  s.q95 = quantile(x, 0.95);
  s.q975 = quantile(x, 0.975);
  s.iact = integrated_autocorrelation_time(x);
  s.degenerate = std::isnan(s.iact);
  s.ess = s.degenerate ? std::numeric_limits<double>::quiet_NaN()
                       : static_cast<double>(s.n) / s.iact;
  return s;
}

}  // namespace creditvol
