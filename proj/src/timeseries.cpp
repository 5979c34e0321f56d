#include "creditvol/timeseries.hpp"

#include <charconv>
#include <cmath>
#include <fstream>

#include "creditvol/csv.hpp"
#include "creditvol/errors.hpp"

namespace creditvol {

namespace {

constexpr std::size_t kMinOverlap = 8;

bool parse_int(std::string_view s, int& out) {
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

}  // namespace

Period make_period(int year, int quarter) { return year * 4 + (quarter - 1); }

Period parse_period(std::string_view s) {
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  int year = 0;
  int sub = 0;
  // 1978Q1, 1978-Q1, 1978 Q1
  if (auto q = s.find_first_of("Qq"); q != std::string_view::npos) {
    std::string_view ys = s.substr(0, q);
    while (!ys.empty() && (ys.back() == '-' || ys.back() == ' ')) ys.remove_suffix(1);
    if (parse_int(ys, year) && parse_int(s.substr(q + 1), sub) && sub >= 1 && sub <= 4) {
      return make_period(year, sub);
    }
    throw DataError("unrecognized period label '" + std::string(s) + "'");
  }
  // ISO 1978-03-31 or 1978-03
  if (s.size() >= 7 && s[4] == '-') {
    int month = 0;
    std::string_view rest = s.substr(5);
    auto dash = rest.find('-');
    if (parse_int(s.substr(0, 4), year) && parse_int(rest.substr(0, dash), month) &&
        month >= 1 && month <= 12) {
      return make_period(year, (month - 1) / 3 + 1);
    }
    throw DataError("unrecognized period label '" + std::string(s) + "'");
  }
  int raw = 0;
  if (parse_int(s, raw)) return raw;
  throw DataError("unrecognized period label '" + std::string(s) + "'");
}

std::string format_period(Period p) {
  const int year = p >= 0 ? p / 4 : -((-p + 3) / 4);
  const int quarter = p - year * 4 + 1;
  return std::to_string(year) + "Q" + std::to_string(quarter);
}

TimeSeries::TimeSeries(std::vector<Period> periods, std::vector<double> values, std::string label)
    : periods_(std::move(periods)), values_(std::move(values)), label_(std::move(label)) {
  if (periods_.size() != values_.size()) {
    throw DimensionError("period and value vectors differ in length");
  }
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) {
      throw DataError("non-finite value at position " + std::to_string(i + 1));
    }
    if (i > 0 && periods_[i] != periods_[i - 1] + 1) {
      throw DataError("periods must be consecutive quarters; " + format_period(periods_[i - 1]) +
                      " followed by " + format_period(periods_[i]));
    }
  }
}

TimeSeries TimeSeries::from_values(std::vector<double> values, Period first, std::string label) {
  std::vector<Period> periods(values.size());
  for (std::size_t i = 0; i < periods.size(); ++i) periods[i] = first + static_cast<Period>(i);
  return TimeSeries(std::move(periods), std::move(values), std::move(label));
}

const double* TimeSeries::at(Period p) const {
  if (empty() || p < periods_.front() || p > periods_.back()) return nullptr;
  return &values_[static_cast<std::size_t>(p - periods_.front())];
}

TimeSeries load_csv(const std::filesystem::path& path, std::string_view value_column,
                    std::string_view period_column) {
  if (!std::filesystem::exists(path)) throw DataError("missing file: " + path.string());
  const csv::Table table = csv::read(path);
  const std::size_t vcol = table.column(value_column);
  const std::size_t pcol = period_column.empty() ? 0 : table.column(period_column);
  std::vector<Period> periods;
  std::vector<double> values;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const std::size_t row = table.line_numbers[r];
    Period p = 0;
    try {
      p = parse_period(table.rows[r][pcol]);
    } catch (const DataError& e) {
      throw DataError(e.what(), row);
    }
    if (!periods.empty()) {
      if (p == periods.back()) throw DataError("duplicated period " + format_period(p), row);
      if (p < periods.back()) throw DataError("non-monotone period " + format_period(p), row);
      if (p != periods.back() + 1) {
        throw DataError("gap before period " + format_period(p) + " (expected quarterly spacing)",
                        row);
      }
    }
    periods.push_back(p);
    values.push_back(csv::parse_number(table.rows[r][vcol], row));
  }
  return TimeSeries(std::move(periods), std::move(values), std::string(value_column));
}

void write_csv(const std::filesystem::path& path, const TimeSeries& ts,
               std::string_view value_name) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "period," << value_name << "\n";
  for (std::size_t i = 0; i < ts.size(); ++i) {
    out << format_period(ts.period(i)) << "," << csv::format_number(ts[i]) << "\n";
  }
}

double mean(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

TimeSeries growth_rate(const TimeSeries& levels) {
  if (levels.size() < 2) throw DataError("growth rate needs at least two observations");
  for (std::size_t i = 0; i < levels.size(); ++i) {
    if (!(levels[i] > 0.0)) {
      throw DataError("non-positive level " + csv::format_number(levels[i]) + " at " +
                      format_period(levels.period(i)));
    }
  }
  std::vector<double> g(levels.size() - 1);
  for (std::size_t i = 1; i < levels.size(); ++i) {
    g[i - 1] = 100.0 * std::log(levels[i] / levels[i - 1]);
  }
  return TimeSeries::from_values(std::move(g), levels.period(1), levels.label());
}

TimeSeries growth_rate_demeaned(const TimeSeries& levels) {
  const TimeSeries g = growth_rate(levels);
  const double m = mean(g.values());
  std::vector<double> d(g.values().begin(), g.values().end());
  for (double& x : d) x -= m;
  // A second pass removes the rounding residue of the first subtraction.
  const double r = mean(d);
  for (double& x : d) x -= r;
  return TimeSeries::from_values(std::move(d), g.first_period(), g.label());
}

std::vector<LeadLagRow> lead_lag_correlation(const TimeSeries& a, const TimeSeries& b, int k_min,
                                             int k_max) {
  if (k_min > k_max) throw DataError("k_min must not exceed k_max");
  std::vector<LeadLagRow> rows;
  for (int k = k_min; k <= k_max; ++k) {
    std::vector<double> xa;
    std::vector<double> xb;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (const double* bv = b.at(a.period(i) + k)) {
        xa.push_back(a[i]);
        xb.push_back(*bv);
      }
    }
    if (xa.size() < kMinOverlap) {
      throw DataError("insufficient overlap (" + std::to_string(xa.size()) + ") at k=" +
                      std::to_string(k));
    }
    const double ma = mean(xa);
    const double mb = mean(xb);
    double saa = 0.0, sbb = 0.0, sab = 0.0;
    for (std::size_t i = 0; i < xa.size(); ++i) {
      const double da = xa[i] - ma;
      const double db = xb[i] - mb;
      saa += da * da;
      sbb += db * db;
      sab += da * db;
    }
    if (saa == 0.0 || sbb == 0.0) {
      throw DataError("zero-variance window at k=" + std::to_string(k));
    }
    rows.push_back({k, sab / std::sqrt(saa * sbb), xa.size()});
  }
  return rows;
}

void write_lead_lag_csv(const std::filesystem::path& path, std::span<const LeadLagRow> rows) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "k,corr\n";
  for (const auto& r : rows) out << r.k << "," << csv::format_number(r.corr) << "\n";
}

}  // namespace creditvol
