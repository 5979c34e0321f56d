#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace creditvol {

// Linear-interpolation sample quantile (Hyndman-Fan type 7).
double quantile(std::span<const double> values, double p);

// Integrated autocorrelation time with Geyer's initial positive sequence
// truncation. NaN for a constant series.
double integrated_autocorrelation_time(std::span<const double> x);

struct SeriesSummary {
  std::size_t n = 0;
  double mean = 0.0;
  double sd = 0.0;
  double q025 = 0.0;
  double q05 = 0.0;
  double q95 = 0.0;
  double q975 = 0.0;
  double iact = 0.0;
  double ess = 0.0;
  // Constant chain: iact and ess are NaN.
  bool degenerate = false;
};

SeriesSummary summarize_series(std::span<const double> x);

}  // namespace creditvol
