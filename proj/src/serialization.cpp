#include "creditvol/serialization.hpp"

#include <cmath>
#include <fstream>

#include "creditvol/csv.hpp"
#include "creditvol/diagnostics.hpp"
#include "creditvol/errors.hpp"

namespace creditvol {

using nlohmann::json;

void to_json(json& j, const SvParams& p) {
  j = json{{"mu_h", p.mu_h}, {"phi_y", p.phi_y}, {"phi_h", p.phi_h}, {"tau", p.tau}, {"rho", p.rho}};
}

void from_json(const json& j, SvParams& p) {
  try {
    j.at("mu_h").get_to(p.mu_h);
    j.at("phi_y").get_to(p.phi_y);
    j.at("phi_h").get_to(p.phi_h);
    j.at("tau").get_to(p.tau);
    j.at("rho").get_to(p.rho);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("SvParams: ") + e.what());
  }
}

void to_json(json& j, const PriorSpec& s) {
  j = json{{"variant", to_string(s.variant)}};
  if (s.variant == PriorVariant::baseline) {
    j["a0"] = s.a0;
    j["b0"] = s.b0;
  } else {
    j["phi_mean"] = s.phi_mean;
    j["phi_sd"] = s.phi_sd;
    j["mu_mean"] = s.mu_mean;
    j["mu_sd"] = s.mu_sd;
    j["tau_mean"] = s.tau_mean;
    j["tau_sd"] = s.tau_sd;
  }
}

void from_json(const json& j, PriorSpec& s) {
  try {
    s = PriorSpec{};
    s.variant = prior_variant_from_string(j.at("variant").get<std::string>());
    s.a0 = j.value("a0", s.a0);
    s.b0 = j.value("b0", s.b0);
    s.phi_mean = j.value("phi_mean", s.phi_mean);
    s.phi_sd = j.value("phi_sd", s.phi_sd);
    s.mu_mean = j.value("mu_mean", s.mu_mean);
    s.mu_sd = j.value("mu_sd", s.mu_sd);
    s.tau_mean = j.value("tau_mean", s.tau_mean);
    s.tau_sd = j.value("tau_sd", s.tau_sd);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("PriorSpec: ") + e.what());
  }
}

void to_json(json& j, const RbcCalibration& c) {
  j = json{{"alpha", c.alpha},     {"beta", c.beta_disc},     {"delta", c.delta},
           {"phi", c.phi_adj},     {"theta", c.theta_labor},  {"gamma_c", c.gamma_c},
           {"chi", c.chi},         {"zeta_ss", c.zeta_ss},    {"h_bar", c.h_bar},
           {"rho_h", c.rho_h},     {"tau", c.tau},            {"rho", c.rho_ar},
           {"nu", c.nu},           {"theta_r", c.theta_r}};
}

void from_json(const json& j, RbcCalibration& c) {
  c = RbcCalibration{};
  c.alpha = j.value("alpha", c.alpha);
  c.beta_disc = j.value("beta", c.beta_disc);
  c.delta = j.value("delta", c.delta);
  c.phi_adj = j.value("phi", c.phi_adj);
  c.theta_labor = j.value("theta", c.theta_labor);
  c.gamma_c = j.value("gamma_c", c.gamma_c);
  c.chi = j.value("chi", c.chi);
  c.zeta_ss = j.value("zeta_ss", c.zeta_ss);
  c.h_bar = j.value("h_bar", c.h_bar);
  c.rho_h = j.value("rho_h", c.rho_h);
  c.tau = j.value("tau", c.tau);
  c.rho_ar = j.value("rho", c.rho_ar);
  c.nu = j.value("nu", c.nu);
  c.theta_r = j.value("theta_r", c.theta_r);
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << j.dump(2) << "\n";
}

void write_shock_csv(const std::filesystem::path& path, const ShockSet& s,
                     std::span<const Period> periods) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "t,eps,eta,eta_star\n";
  for (std::size_t t = 0; t < s.eps.size(); ++t) {
    out << (periods.empty() ? std::to_string(t + 1) : format_period(periods[t])) << ","
        << csv::format_number(s.eps[t]) << ",";
    if (t > 0) out << csv::format_number(s.eta[t - 1]) << "," << csv::format_number(s.eta_star[t - 1]);
    else out << ",";
    out << "\n";
  }
}

TimeSeries read_shock_series(const std::filesystem::path& path, const std::string& column) {
  const csv::Table table = csv::read(path);
  const std::size_t tc = table.column("t");
  const std::size_t vc = table.column(column);
  std::vector<Period> periods;
  std::vector<double> values;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& cell = table.rows[r][vc];
    if (cell.empty() && periods.empty()) continue;  // t = 1 has no volatility shock
    periods.push_back(parse_period(table.rows[r][tc]));
    values.push_back(csv::parse_number(cell, table.line_numbers[r]));
  }
  return TimeSeries(std::move(periods), std::move(values), column);
}

void write_draws_csv(const std::filesystem::path& path, const PosteriorDraws& d) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "mu_h,phi_y,phi_h,tau,rho,loglik\n";
  for (std::size_t i = 0; i < d.params.size(); ++i) {
    const auto& p = d.params[i];
    out << csv::format_number(p.mu_h) << "," << csv::format_number(p.phi_y) << ","
        << csv::format_number(p.phi_h) << "," << csv::format_number(p.tau) << ","
        << csv::format_number(p.rho) << "," << csv::format_number(d.logliks[i]) << "\n";
  }
}

PosteriorDraws read_draws_csv(const std::filesystem::path& path) {
  const csv::Table t = csv::read(path);
  const std::size_t c[6] = {t.column("mu_h"), t.column("phi_y"), t.column("phi_h"),
                            t.column("tau"),  t.column("rho"),   t.column("loglik")};
  PosteriorDraws d;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const std::size_t ln = t.line_numbers[r];
    auto num = [&](std::size_t k) { return csv::parse_number(t.rows[r][c[k]], ln); };
    d.params.push_back({num(0), num(1), num(2), num(3), num(4)});
    d.logliks.push_back(num(5));
  }
  return d;
}

void write_latent_paths_csv(const std::filesystem::path& path, const PosteriorDraws& d,
                            std::span<const Period> periods) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "draw";
  for (Period p : periods) out << "," << format_period(p);
  out << "\n";
  for (std::size_t k = 0; k < d.latent_paths.size(); ++k) {
    out << d.path_draw_index[k];
    for (double h : d.latent_paths[k].h) out << "," << csv::format_number(h);
    out << "\n";
  }
}

std::vector<LatentPath> read_latent_paths_csv(const std::filesystem::path& path,
                                              std::vector<std::size_t>* draw_index) {
  const csv::Table t = csv::read(path);
  std::vector<LatentPath> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const std::size_t ln = t.line_numbers[r];
    if (draw_index) draw_index->push_back(static_cast<std::size_t>(csv::parse_number(t.rows[r][0], ln)));
    LatentPath p;
    for (std::size_t c = 1; c < t.rows[r].size(); ++c) p.h.push_back(csv::parse_number(t.rows[r][c], ln));
    out.push_back(std::move(p));
  }
  return out;
}

void write_volatility_csv(const std::filesystem::path& path, const PosteriorDraws& d,
                          std::span<const Period> periods) {
  if (d.latent_paths.empty()) throw DataError("no latent paths were stored");
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "t,vol_mean,vol_p05,vol_p95\n";
  std::vector<double> col(d.latent_paths.size());
  for (std::size_t t = 0; t < periods.size(); ++t) {
    for (std::size_t k = 0; k < col.size(); ++k) col[k] = 100.0 * std::exp(0.5 * d.latent_paths[k].h[t]);
    double m = 0.0;
    for (double v : col) m += v;
    m /= static_cast<double>(col.size());
    out << format_period(periods[t]) << "," << csv::format_number(m) << ","
        << csv::format_number(quantile(col, 0.05)) << "," << csv::format_number(quantile(col, 0.95))
        << "\n";
  }
}

json summary_json(const PosteriorSummary& s) {
  json params = json::object();
  for (std::size_t k = 0; k < s.params.size(); ++k) {
    const auto& p = s.params[k];
    json e{{"mean", p.mean},
           {"sd", p.sd},
           {"ci95", {p.q025, p.q975}},
           {"degenerate", p.degenerate}};
    e["iact"] = p.degenerate ? json(nullptr) : json(p.iact);
    e["ess"] = p.degenerate ? json(nullptr) : json(p.ess);
    params[kSvParamNames[k]] = e;
  }
  return json{{"parameters", params},
              {"draws", s.draws},
              {"acceptance_rate", s.acceptance_rate},
              {"post_burn_in_acceptance_rate", s.post_burn_in_acceptance_rate}};
}

}  // namespace creditvol
