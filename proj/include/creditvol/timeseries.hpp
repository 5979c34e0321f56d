#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace creditvol {

// Quarterly period encoded as year * 4 + (quarter - 1).
using Period = int;

Period make_period(int year, int quarter);
// Accepts "1978Q1", "1978-Q1", "1978 Q1", ISO dates "1978-03-31" or
// "1978-03" (month mapped to its quarter), and bare integers (taken as
// the raw index; used for simulated data).
Period parse_period(std::string_view label);
std::string format_period(Period p);

// An equally spaced quarterly series with finite values.
class TimeSeries {
 public:
  TimeSeries() = default;
  // Validates: same length, strictly consecutive periods, finite values.
  TimeSeries(std::vector<Period> periods, std::vector<double> values, std::string label = {});

  // Consecutive periods starting at `first`.
  static TimeSeries from_values(std::vector<double> values, Period first = 0,
                                std::string label = {});

  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }
  std::span<const double> values() const { return values_; }
  const std::vector<Period>& periods() const { return periods_; }
  double operator[](std::size_t i) const { return values_[i]; }
  Period period(std::size_t i) const { return periods_[i]; }
  Period first_period() const { return periods_.front(); }
  const std::string& label() const { return label_; }

  // Value at period `p`, or nullptr outside the sample.
  const double* at(Period p) const;

 private:
  std::vector<Period> periods_;
  std::vector<double> values_;
  std::string label_;
};

// Reads `value_column` from a CSV file. The period column is `period_column`
// when given, the first column otherwise. Blank or unparseable cells and
// duplicated / non-monotone / gapped periods are rejected with the row number.
TimeSeries load_csv(const std::filesystem::path& path, std::string_view value_column,
                    std::string_view period_column = {});

void write_csv(const std::filesystem::path& path, const TimeSeries& ts,
               std::string_view value_name = "value");

// 100 * (log v_t - log v_{t-1}); length n - 1, stamped with the later period.
TimeSeries growth_rate(const TimeSeries& levels);

// growth_rate minus its sample mean.
TimeSeries growth_rate_demeaned(const TimeSeries& levels);

double mean(std::span<const double> v);

struct LeadLagRow {
  int k;
  double corr;
  std::size_t n;  // overlap length
};

// Pearson correlation of a_t with b_{t+k} over the common overlap of the two
// period indices, for every k in [k_min, k_max].
std::vector<LeadLagRow> lead_lag_correlation(const TimeSeries& a, const TimeSeries& b,
                                             int k_min, int k_max);

void write_lead_lag_csv(const std::filesystem::path& path, std::span<const LeadLagRow> rows);

}  // namespace creditvol
