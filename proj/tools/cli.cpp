#include "cli.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"

#include "creditvol/csv.hpp"
#include "creditvol/errors.hpp"
#include "creditvol/local_projections.hpp"
#include "creditvol/manifest.hpp"
#include "creditvol/particle_filter.hpp"
#include "creditvol/pmmh.hpp"
#include "creditvol/pruned_irf.hpp"
#include "creditvol/rng.hpp"
#include "creditvol/serialization.hpp"
#include "creditvol/sv_model.hpp"
#include "creditvol/timeseries.hpp"

namespace creditvol::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Failure : std::runtime_error {
  Failure(int code, std::string name, const std::string& msg)
      : std::runtime_error(msg), code(code), name(std::move(name)) {}
  int code;
  std::string name;
};

Failure missing(const std::string& msg) { return {missing_input, "missing_input", msg}; }
Failure conflict(const std::string& msg) { return {config_conflict, "config_conflict", msg}; }

void require_file(const std::string& path, const std::string& flag) {
  if (path.empty()) throw missing(flag + " is required");
  if (!fs::is_regular_file(path)) throw missing(flag + ": no such file: " + path);
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    if (c == '\n') {
      out += "\\n";
      continue;
    }
    out.push_back(c);
  }
  return out;
}

int report(std::ostream& err, int code, const std::string& name, const std::string& msg) {
  err << "error: code=" << name << " exit=" << code << " msg=\"" << escape(msg) << "\"\n";
  return code;
}

// Numbers are recorded as JSON numbers, everything else as text.
json typed(const std::string& s) {
  const char* b = s.data();
  const char* e = s.data() + s.size();
  unsigned long long u = 0;
  if (auto r = std::from_chars(b, e, u); r.ec == std::errc() && r.ptr == e) return u;
  long long i = 0;
  if (auto r = std::from_chars(b, e, i); r.ec == std::errc() && r.ptr == e) return i;
  double d = 0.0;
  if (auto r = std::from_chars(b, e, d); r.ec == std::errc() && r.ptr == e && std::isfinite(d)) return d;
  return s;
}

// Configuration snapshot of a subcommand: every option with its effective value.
json snapshot(const CLI::App* sub) {
  json j = json::object();
  for (const CLI::Option* opt : sub->get_options()) {
    std::string name = opt->get_name(false, true);
    if (name.empty()) continue;
    while (!name.empty() && name.front() == '-') name.erase(name.begin());
    if (name == "help" || name == "config") continue;
    const auto& res = opt->results();
    if (res.size() > 1) {
      j[name] = json::array();
      for (const auto& r : res) j[name].push_back(typed(r));
    } else if (res.size() == 1) {
      j[name] = typed(res.front());
    } else {
      j[name] = typed(opt->get_default_str());
    }
  }
  return j;
}

class Run {
 public:
  Run(std::string command, const CLI::App* sub, const std::string& out_dir)
      : dir_(out_dir), start_(std::chrono::steady_clock::now()) {
    if (out_dir.empty()) throw missing("--out is required");
    manifest_.command = std::move(command);
    manifest_.config = snapshot(sub);
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec || !fs::is_directory(dir_)) throw DataError("cannot create output directory " + out_dir);
  }

  fs::path path(const std::string& name) {
    names_.push_back(name);
    return dir_ / name;
  }
  RunManifest& manifest() { return manifest_; }

  void finish() {
    for (const auto& n : names_) manifest_.add_output(dir_, n);
    manifest_.duration_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    write_manifest(dir_, manifest_);
  }

 private:
  fs::path dir_;
  std::vector<std::string> names_;
  RunManifest manifest_;
  std::chrono::steady_clock::time_point start_;
};

// --------------------------------------------------------------------------
// Shared input handling for the observation series.

struct SeriesInput {
  std::string data;
  std::string column = "value";
  std::string period_column;
  std::string transform = "levels";

  void add_to(CLI::App* sub, bool required) {
    auto* o = sub->add_option("--data", data, "CSV file holding the series");
    if (required) o->required();
    sub->add_option("--column", column, "value column")->capture_default_str();
    sub->add_option("--period-column", period_column, "period column (default: first column)");
    sub->add_option("--transform", transform,
                    "levels: demeaned 100 x log growth; logdiff: demeaned log growth; "
                    "demean: subtract the mean; none")
        ->check(CLI::IsMember({"levels", "logdiff", "demean", "none"}))
        ->capture_default_str();
  }

  TimeSeries load(RunManifest& m) const {
    require_file(data, "--data");
    m.add_input(data);
    TimeSeries ts = load_csv(data, column, period_column);
    if (transform == "levels") return growth_rate_demeaned(ts);
    if (transform == "logdiff") {
      const TimeSeries g = growth_rate_demeaned(ts);
      std::vector<double> v(g.values().begin(), g.values().end());
      for (double& x : v) x /= 100.0;
      return TimeSeries(g.periods(), std::move(v), g.label());
    }
    if (transform == "demean") {
      const double mu = mean(ts.values());
      std::vector<double> v(ts.values().begin(), ts.values().end());
      for (double& x : v) x -= mu;
      return TimeSeries(ts.periods(), std::move(v), ts.label());
    }
    return ts;
  }
};

SvParams read_params(const std::string& path, RunManifest& m) {
  require_file(path, "--params");
  m.add_input(path);
  SvParams p = read_json(path).get<SvParams>();
  p.validate();
  return p;
}

void write_series(const fs::path& path, const TimeSeries& ts, const std::string& name) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "t," << name << "\n";
  for (std::size_t i = 0; i < ts.size(); ++i)
    out << format_period(ts.period(i)) << "," << csv::format_number(ts[i]) << "\n";
}

// --------------------------------------------------------------------------
// estimate

struct EstimateArgs {
  SeriesInput input;
  std::string prior = "baseline";
  std::string variant = "correlated";
  std::size_t iterations = 15000;
  std::size_t burn_in = 5000;
  std::size_t particles = 100;
  double gamma = 0.99;
  double target = 0.25;
  std::uint64_t seed = 1;
  std::size_t chains = 1;
  std::size_t path_thin = 10;
  std::string initial;
  std::string out;
};

std::uint64_t chain_seed(std::uint64_t seed, std::size_t k) {
  return k == 0 ? seed : derive_seed(derive_seed(seed, "chain"), static_cast<std::uint64_t>(k));
}

void run_estimate(const EstimateArgs& a, const CLI::App* sub, std::ostream& out) {
  Run run("estimate", sub, a.out);
  const TimeSeries y = a.input.load(run.manifest());

  ChainConfig cfg;
  cfg.iterations = a.iterations;
  cfg.burn_in = a.burn_in;
  cfg.particles = a.particles;
  cfg.gamma = a.gamma;
  cfg.target_accept = a.target;
  cfg.path_thin = a.path_thin;
  cfg.prior = prior_variant_from_string(a.prior) == PriorVariant::baseline ? PriorSpec::baseline()
                                                                           : PriorSpec::robustness();
  cfg.variant = a.variant == "standard" ? SamplerVariant::standard : SamplerVariant::correlated;
  if (!a.initial.empty()) cfg.initial = read_params(a.initial, run.manifest());
  if (a.chains == 0) throw ConfigError("--chains must be at least 1");
  if (a.path_thin == 0) throw ConfigError("--path-thin must be at least 1 (volatility bands need paths)");
  cfg.validate();

  std::vector<PosteriorDraws> chains(a.chains);
  std::vector<std::exception_ptr> errors(a.chains);
  std::vector<ChainConfig> configs(a.chains, cfg);
  for (std::size_t k = 0; k < a.chains; ++k) {
    configs[k].seed = chain_seed(a.seed, k);
    run.manifest().seeds["chain-" + std::to_string(k)] = configs[k].seed;
  }
  run.manifest().seeds["seed"] = a.seed;
  auto work = [&](std::size_t k) {
    try {
      chains[k] = run_chain(y.values(), configs[k]);
    } catch (...) {
      errors[k] = std::current_exception();
    }
  };
  if (a.chains == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t k = 0; k < a.chains; ++k) pool.emplace_back(work, k);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  PosteriorDraws pooled;
  for (auto& c : chains) {
    const std::size_t offset = pooled.params.size();
    pooled.params.insert(pooled.params.end(), c.params.begin(), c.params.end());
    pooled.logliks.insert(pooled.logliks.end(), c.logliks.begin(), c.logliks.end());
    pooled.latent_paths.insert(pooled.latent_paths.end(), c.latent_paths.begin(), c.latent_paths.end());
    for (auto i : c.path_draw_index) pooled.path_draw_index.push_back(i + offset);
    pooled.filter_failures += c.filter_failures;
    pooled.steplength = c.steplength;
  }

  json summary = summary_json(summarize(pooled));
  summary["chains"] = json::array();
  for (std::size_t k = 0; k < chains.size(); ++k) {
    summary["chains"].push_back({{"seed", configs[k].seed},
                                 {"acceptance_rate", chains[k].acceptance_rate()},
                                 {"post_burn_in_acceptance_rate", chains[k].post_burn_in_acceptance_rate()},
                                 {"filter_failures", chains[k].filter_failures},
                                 {"final_scale", chains[k].scale_trace.empty() ? 0.0 : chains[k].scale_trace.back()}});
  }
  if (chains.size() == 1) {
    summary["acceptance_rate"] = chains[0].acceptance_rate();
    summary["post_burn_in_acceptance_rate"] = chains[0].post_burn_in_acceptance_rate();
  } else {
    summary.erase("acceptance_rate");
    summary.erase("post_burn_in_acceptance_rate");
  }
  summary["sampler"] = {{"iterations", cfg.iterations},
                        {"burn_in", cfg.burn_in},
                        {"particles", cfg.particles},
                        {"gamma", cfg.gamma},
                        {"variant", a.variant},
                        {"prior", cfg.prior},
                        {"target_accept", cfg.target_accept},
                        {"steplength", pooled.steplength}};
  summary["observations"] = y.size();
  summary["first_period"] = format_period(y.first_period());

  write_series(run.path("series.csv"), y, "y");
  write_draws_csv(run.path("draws.csv"), pooled);
  write_latent_paths_csv(run.path("latent_paths.csv"), pooled, y.periods());
  write_volatility_csv(run.path("volatility.csv"), pooled, y.periods());
  write_json(run.path("summary.json"), summary);
  {
    std::ofstream tr(run.path("trace.csv"));
    tr << "chain,iteration,accepted,scale\n";
    for (std::size_t k = 0; k < chains.size(); ++k)
      for (std::size_t i = 0; i < chains[k].accept_trace.size(); ++i)
        tr << k << "," << i << "," << int(chains[k].accept_trace[i]) << ","
           << csv::format_number(chains[k].scale_trace[i]) << "\n";
  }
  run.manifest().config["steplength"] = pooled.steplength;
  run.finish();
  out << "estimate: " << pooled.params.size() << " draws written to " << a.out << "\n";
}

// --------------------------------------------------------------------------
// filter

struct FilterArgs {
  SeriesInput input;
  std::string params;
  std::size_t particles = 100;
  std::uint64_t seed = 1;
  bool dump = false;
  std::string out;
};

void run_filter(const FilterArgs& a, const CLI::App* sub, std::ostream& out) {
  Run run("filter", sub, a.out);
  const TimeSeries y = a.input.load(run.manifest());
  const SvParams p = read_params(a.params, run.manifest());
  if (a.particles < 2) throw ConfigError("--particles must be at least 2");
  const std::uint64_t useed = derive_seed(a.seed, "u-initial");
  run.manifest().seeds["seed"] = a.seed;
  run.manifest().seeds["u-initial"] = useed;
  const SeedBlock u = make_seed_block(y.size(), a.particles, useed);
  const ParticleSystem ps = correlated_pf(y.values(), p, u, a.particles);
  {
    std::ofstream f(run.path("filter.csv"));
    f << "t,loglik_contribution,ESS_t\n";
    for (std::size_t t = 0; t < ps.T; ++t)
      f << format_period(y.period(t)) << "," << csv::format_number(ps.loglik_terms[t]) << ","
        << csv::format_number(ps.ess(t)) << "\n";
  }
  write_json(run.path("loglik.json"), json{{"loglik", ps.loglik}, {"particles", a.particles}, {"T", ps.T}});
  if (a.dump) write_binary(ps, run.path("particles.bin"));
  run.finish();
  out << "loglik " << csv::format_number(ps.loglik) << "\n";
}

// --------------------------------------------------------------------------
// extract-shocks

struct ExtractArgs {
  SeriesInput input;
  std::string from;
  std::string params;
  std::string latent;
  bool per_draw = false;
  std::string out;
};

void run_extract(const ExtractArgs& a, const CLI::App* sub, std::ostream& out) {
  Run run("extract-shocks", sub, a.out);
  TimeSeries y;
  SvParams p;
  LatentPath h;
  if (a.per_draw && a.from.empty()) throw conflict("--per-draw needs --from");
  std::vector<LatentPath> draw_paths;
  std::vector<SvParams> draw_params;
  if (!a.from.empty()) {
    const fs::path dir = a.from;
    require_file((dir / "draws.csv").string(), "--from");
    require_file((dir / "latent_paths.csv").string(), "--from");
    run.manifest().add_input(dir / "draws.csv");
    run.manifest().add_input(dir / "latent_paths.csv");
    const PosteriorDraws d = read_draws_csv(dir / "draws.csv");
    if (d.params.empty()) throw DataError("no draws in " + (dir / "draws.csv").string());
    p = posterior_mean_params(d);
    PosteriorDraws paths;
    std::vector<std::size_t> index;
    paths.latent_paths = read_latent_paths_csv(dir / "latent_paths.csv", &index);
    h = posterior_mean_path(paths);
    if (a.per_draw) {
      draw_paths = paths.latent_paths;
      for (std::size_t k : index) {
        if (k >= d.params.size()) throw DataError("latent path refers to draw " + std::to_string(k) + " beyond draws.csv");
        draw_params.push_back(d.params[k]);
      }
    }
    if (a.input.data.empty()) {
      require_file((dir / "series.csv").string(), "--from");
      run.manifest().add_input(dir / "series.csv");
      y = load_csv(dir / "series.csv", "y", "t");
    } else {
      y = a.input.load(run.manifest());
    }
  } else {
    if (a.params.empty() || a.latent.empty())
      throw missing("either --from or both --params and --latent are required");
    p = read_params(a.params, run.manifest());
    require_file(a.latent, "--latent");
    run.manifest().add_input(a.latent);
    const TimeSeries hs = load_csv(a.latent, "h");
    h.h.assign(hs.values().begin(), hs.values().end());
    y = a.input.load(run.manifest());
  }
  if (h.h.size() != y.size())
    throw DimensionError("latent path has " + std::to_string(h.h.size()) + " periods, series has " +
                         std::to_string(y.size()));
  const ShockSet s = extract_shocks(y.values(), h, p);
  write_shock_csv(run.path("shocks.csv"), s, y.periods());
  {
    std::ofstream f(run.path("volatility_path.csv"));
    f << "t,h,sigma\n";
    for (std::size_t t = 0; t < y.size(); ++t)
      f << format_period(y.period(t)) << "," << csv::format_number(h.h[t]) << ","
        << csv::format_number(std::exp(0.5 * h.h[t])) << "\n";
  }
  write_json(run.path("params.json"), json(p));
  if (a.per_draw) {
    // One block of rows per stored path, each with its own draw's parameters.
    std::ofstream f(run.path("shocks_per_draw.csv"));
    f << "path,t,eps,eta,eta_star\n";
    for (std::size_t k = 0; k < draw_paths.size(); ++k) {
      if (draw_paths[k].h.size() != y.size()) throw DimensionError("stored path length does not match the series");
      const ShockSet sk = extract_shocks(y.values(), draw_paths[k], draw_params[k]);
      for (std::size_t t = 0; t < y.size(); ++t) {
        f << k << "," << format_period(y.period(t)) << "," << csv::format_number(sk.eps[t]) << ",";
        if (t > 0) f << csv::format_number(sk.eta[t - 1]) << "," << csv::format_number(sk.eta_star[t - 1]);
        else f << ",";
        f << "\n";
      }
    }
  }
  run.manifest().config["latent_path"] = a.from.empty() ? "supplied" : "posterior mean of stored paths";
  run.finish();
  out << "extract-shocks: " << s.eps.size() << " periods\n";
}

// --------------------------------------------------------------------------
// lp

struct LpArgs {
  std::string data;
  std::string period_column;
  std::string outcome;
  std::vector<std::string> controls;
  std::string shock;
  std::string shock_kind = "eta_star";
  std::string indicator;
  std::string indicator_column = "recession";
  int horizons = 12;
  int lags = 2;
  double band = 0.68;
  std::string regime = "linear";
  bool no_outcome_lags = false;
  std::string out;
};

void run_lp_cmd(const LpArgs& a, const CLI::App* sub, std::ostream& out) {
  Run run("lp", sub, a.out);
  require_file(a.data, "--data");
  require_file(a.shock, "--shock");
  if (a.regime == "state" && a.indicator.empty()) throw conflict("--regime state needs --indicator");
  if (a.regime == "linear" && !a.indicator.empty())
    throw conflict("--indicator given with --regime linear");
  run.manifest().add_input(a.data);
  run.manifest().add_input(a.shock);

  const TimeSeries x = load_csv(a.data, a.outcome, a.period_column);
  LpSpec spec;
  spec.max_horizon = a.horizons;
  spec.lag_order = a.lags;
  spec.band_level = a.band;
  spec.include_outcome_lags = !a.no_outcome_lags;
  spec.shock_kind = a.shock_kind == "eta" ? ShockKind::eta : ShockKind::eta_star;
  for (const auto& c : a.controls) spec.controls.push_back({c, load_csv(a.data, c, a.period_column)});
  if (!a.indicator.empty()) {
    require_file(a.indicator, "--indicator");
    run.manifest().add_input(a.indicator);
    spec.regime_indicator = load_csv(a.indicator, a.indicator_column);
  }
  spec.validate();
  const TimeSeries shock = read_shock_series(a.shock, a.shock_kind);
  const LpResult r = run_lp(x, spec, shock);
  write_lp_csv(run.path("lp.csv").string(), r);
  run.manifest().config["warnings"] = r.warnings;
  run.manifest().config["newey_west_lag"] = "horizon h (Bartlett kernel)";
  run.manifest().config["shock_standardization"] = "full sample, mean 0, unit variance";
  if (!a.indicator.empty()) run.manifest().config["regime_interaction"] = "all regressors, indicator lagged one period";
  run.finish();
  for (const auto& w : r.warnings) out << "warning: " << w << "\n";
  out << "lp: " << r.rows.size() << " rows\n";
}

// --------------------------------------------------------------------------
// irf-decompose

struct DecomposeArgs {
  std::string solution;
  std::string calibration;
  double eta_star = 1.0;
  std::string out;
};

void run_decompose(const DecomposeArgs& a, const CLI::App* sub, std::ostream& out) {
  Run run("irf-decompose", sub, a.out);
  require_file(a.solution, "--solution");
  run.manifest().add_input(a.solution);
  const PrunedSolution sol = read_solution(fs::path(a.solution));
  RbcCalibration cal;
  if (!a.calibration.empty()) {
    require_file(a.calibration, "--calibration");
    run.manifest().add_input(a.calibration);
    cal = read_json(a.calibration).get<RbcCalibration>();
  }
  cal.validate();
  const auto rows = decompose_impact(sol, a.eta_star);
  {
    std::ofstream f(run.path("decomposition.csv"));
    f << "variable,direct,interaction,total\n";
    for (const auto& r : rows)
      f << r.variable << "," << csv::format_number(r.direct) << "," << csv::format_number(r.interaction)
        << "," << csv::format_number(r.total) << "\n";
  }
  const ZetaBound b = zeta_ss_bound(cal);
  write_json(run.path("calibration.json"),
             json{{"calibration", cal},
                  {"zeta_ss_bound",
                   {{"bound", b.bound},
                    {"zeta_ss", cal.zeta_ss},
                    {"admissible", b.admissible},
                    {"published_bound", b.published},
                    {"discrepancy", b.discrepancy}}}});
  run.finish();
  out << "zeta_ss bound " << std::setprecision(6) << b.bound << " (published " << b.published
      << ", difference " << b.discrepancy << "); zeta_ss " << cal.zeta_ss
      << (b.admissible ? " admissible" : " NOT admissible") << "\n";
}

// --------------------------------------------------------------------------
// simulate

struct SimulateArgs {
  std::string solution;
  std::string sv_params;
  std::string shock = "eta_star";
  double size = 1.0;
  std::size_t horizon = 40;
  std::string start = "stochastic";
  std::string moments = "realized";
  std::size_t T = 164;
  std::uint64_t seed = 1;
  std::string out;
};

void run_simulate(const SimulateArgs& a, const CLI::App* sub, std::ostream& out) {
  if (a.solution.empty() == a.sv_params.empty()) {
    if (a.solution.empty()) throw missing("one of --solution or --sv-params is required");
    throw conflict("--solution and --sv-params are mutually exclusive");
  }
  Run run("simulate", sub, a.out);
  if (!a.solution.empty()) {
    require_file(a.solution, "--solution");
    run.manifest().add_input(a.solution);
    const PrunedSolution sol = read_solution(fs::path(a.solution));
    IrfOptions opt;
    opt.start = a.start == "zero" ? IrfStart::zero : IrfStart::stochastic_steady_state;
    opt.moments = a.moments == "expected" ? MomentMode::expected : MomentMode::realized;
    const IrfPaths paths = irf(sol, shock_name_from_string(a.shock), a.size, a.horizon, opt);
    std::ofstream f(run.path("irf.csv"));
    f << "t,variable,value\n";
    for (Eigen::Index t = 0; t < paths.values.rows(); ++t)
      for (std::size_t v = 0; v < paths.variables.size(); ++v)
        f << t << "," << paths.variables[v] << ","
          << csv::format_number(paths.values(t, static_cast<Eigen::Index>(v))) << "\n";
    f.close();
    run.finish();
    out << "simulate: " << paths.values.rows() << " periods of " << paths.variables.size() << " variables\n";
    return;
  }
  const SvParams p = read_params(a.sv_params, run.manifest());
  if (a.T < 2) throw ConfigError("--T must be at least 2");
  run.manifest().seeds["seed"] = a.seed;
  const SvSimulation sim = simulate(p, a.T, a.seed);
  {
    std::ofstream f(run.path("simulated.csv"));
    f << "t,y,h\n";
    for (std::size_t t = 0; t < sim.y.size(); ++t)
      f << format_period(sim.y.period(t)) << "," << csv::format_number(sim.y[t]) << ","
        << csv::format_number(sim.h.h[t]) << "\n";
  }
  write_shock_csv(run.path("shocks.csv"), sim.shocks, sim.y.periods());
  run.finish();
  out << "simulate: " << a.T << " observations\n";
}

// --------------------------------------------------------------------------
// leadlag

struct LeadLagArgs {
  std::string a_path, b_path;
  std::string a_column = "vol_mean", b_column = "value";
  std::string a_period, b_period;
  int kmin = -4, kmax = 4;
  std::string out;
};

void run_leadlag(const LeadLagArgs& a, const CLI::App* sub, std::ostream& out) {
  Run run("leadlag", sub, a.out);
  require_file(a.a_path, "--a");
  require_file(a.b_path, "--b");
  if (a.kmin > a.kmax) throw ConfigError("--kmin exceeds --kmax");
  run.manifest().add_input(a.a_path);
  run.manifest().add_input(a.b_path);
  const TimeSeries x = load_csv(a.a_path, a.a_column, a.a_period);
  const TimeSeries z = load_csv(a.b_path, a.b_column, a.b_period);
  const auto rows = lead_lag_correlation(x, z, a.kmin, a.kmax);
  write_lead_lag_csv(run.path("leadlag.csv"), rows);
  // Volatility enters in levels (sigma = exp(h/2), any positive scale).
  run.manifest().config["volatility_units"] = "levels";
  run.finish();
  out << "leadlag: " << rows.size() << " lags\n";
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Stochastic volatility, uncertainty shocks and pruned impulse responses", "creditvol"};
  app.set_config("--config", "", "TOML or INI file; [subcommand] sections, flags take precedence");
  app.set_version_flag("--version", std::string(library_version()));
  app.require_subcommand(1);

  EstimateArgs est;
  auto* s_est = app.add_subcommand("estimate", "Correlated PMMH estimation of the SV-leverage model");
  est.input.add_to(s_est, true);
  s_est->add_option("--prior", est.prior)->check(CLI::IsMember({"baseline", "robustness"}))->capture_default_str();
  s_est->add_option("--variant", est.variant)->check(CLI::IsMember({"correlated", "standard"}))->capture_default_str();
  s_est->add_option("--iterations", est.iterations)->capture_default_str();
  s_est->add_option("--burn-in", est.burn_in)->capture_default_str();
  s_est->add_option("--particles", est.particles)->capture_default_str();
  s_est->add_option("--gamma", est.gamma, "correlation of consecutive auxiliary draws")->capture_default_str();
  s_est->add_option("--target-accept", est.target)->capture_default_str();
  s_est->add_option("--seed", est.seed)->capture_default_str();
  s_est->add_option("--chains", est.chains, "independent chains run concurrently")->capture_default_str();
  s_est->add_option("--path-thin", est.path_thin, "store the latent path of every k-th retained draw")->capture_default_str();
  s_est->add_option("--initial", est.initial, "JSON starting parameters");
  s_est->add_option("--out", est.out, "output directory")->required();

  FilterArgs flt;
  auto* s_flt = app.add_subcommand("filter", "Run the particle filter at fixed parameters");
  flt.input.add_to(s_flt, true);
  s_flt->add_option("--params", flt.params, "JSON file with mu_h, phi_y, phi_h, tau, rho")->required();
  s_flt->add_option("--particles", flt.particles)->capture_default_str();
  s_flt->add_option("--seed", flt.seed)->capture_default_str();
  s_flt->add_flag("--dump", flt.dump, "also write particles.bin");
  s_flt->add_option("--out", flt.out)->required();

  ExtractArgs ext;
  auto* s_ext = app.add_subcommand("extract-shocks", "Recover eps, eta and eta_star from a latent path");
  ext.input.add_to(s_ext, false);
  auto* o_from = s_ext->add_option("--from", ext.from, "output directory of estimate");
  auto* o_params = s_ext->add_option("--params", ext.params, "JSON parameter file");
  auto* o_latent = s_ext->add_option("--latent", ext.latent, "CSV with a column h");
  o_from->excludes(o_params)->excludes(o_latent);
  s_ext->add_flag("--per-draw", ext.per_draw, "also write shocks for every stored path (needs --from)");
  s_ext->add_option("--out", ext.out)->required();

  LpArgs lp;
  auto* s_lp = app.add_subcommand("lp", "Local projections on an extracted shock");
  s_lp->add_option("--data", lp.data, "CSV with the outcome and control columns")->required();
  s_lp->add_option("--period-column", lp.period_column);
  s_lp->add_option("--outcome", lp.outcome)->required();
  s_lp->add_option("--controls", lp.controls, "control columns in --data")->delimiter(',');
  s_lp->add_option("--shock", lp.shock, "shocks.csv from extract-shocks")->required();
  s_lp->add_option("--shock-kind", lp.shock_kind)->check(CLI::IsMember({"eta_star", "eta"}))->capture_default_str();
  s_lp->add_option("--indicator", lp.indicator, "CSV with a 0/1 state column");
  s_lp->add_option("--indicator-column", lp.indicator_column)->capture_default_str();
  s_lp->add_option("--horizons", lp.horizons)->capture_default_str();
  s_lp->add_option("--lags", lp.lags)->capture_default_str();
  s_lp->add_option("--band", lp.band)->capture_default_str();
  s_lp->add_option("--regime", lp.regime)->check(CLI::IsMember({"linear", "state"}))->capture_default_str();
  s_lp->add_flag("--no-outcome-lags", lp.no_outcome_lags);
  s_lp->add_option("--out", lp.out)->required();

  DecomposeArgs dec;
  auto* s_dec = app.add_subcommand("irf-decompose", "Direct and interaction impact of a volatility shock");
  s_dec->add_option("--solution", dec.solution)->required();
  s_dec->add_option("--calibration", dec.calibration, "JSON calibration (defaults built in)");
  s_dec->add_option("--eta-star", dec.eta_star)->capture_default_str();
  s_dec->add_option("--out", dec.out)->required();

  SimulateArgs sim;
  auto* s_sim = app.add_subcommand("simulate", "Impulse responses from a solution file, or SV data");
  s_sim->add_option("--solution", sim.solution);
  s_sim->add_option("--sv-params", sim.sv_params);
  s_sim->add_option("--shock", sim.shock)->check(CLI::IsMember({"eta_star", "eps_zeta"}))->capture_default_str();
  s_sim->add_option("--size", sim.size)->capture_default_str();
  s_sim->add_option("--horizon", sim.horizon)->capture_default_str();
  s_sim->add_option("--start", sim.start)->check(CLI::IsMember({"stochastic", "zero"}))->capture_default_str();
  s_sim->add_option("--moments", sim.moments)->check(CLI::IsMember({"realized", "expected"}))->capture_default_str();
  s_sim->add_option("--T", sim.T)->capture_default_str();
  s_sim->add_option("--seed", sim.seed)->capture_default_str();
  s_sim->add_option("--out", sim.out)->required();

  LeadLagArgs ll;
  auto* s_ll = app.add_subcommand("leadlag", "Lead/lag correlations of two series");
  s_ll->add_option("--a", ll.a_path)->required();
  s_ll->add_option("--a-column", ll.a_column)->capture_default_str();
  s_ll->add_option("--a-period-column", ll.a_period);
  s_ll->add_option("--b", ll.b_path)->required();
  s_ll->add_option("--b-column", ll.b_column)->capture_default_str();
  s_ll->add_option("--b-period-column", ll.b_period);
  s_ll->add_option("--kmin", ll.kmin)->capture_default_str();
  s_ll->add_option("--kmax", ll.kmax)->capture_default_str();
  s_ll->add_option("--out", ll.out)->required();

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::RequiredError& e) {
    // Requirements are checked before unknown arguments, and a missing
    // subcommand is a usage problem rather than a missing input.
    if (!app.remaining(true).empty()) {
      return report(err, usage, "usage", "unrecognized arguments: " + CLI::detail::join(app.remaining(true), " "));
    }
    if (app.get_subcommands().empty()) return report(err, usage, "usage", e.what());
    return report(err, missing_input, "missing_input", e.what());
  } catch (const CLI::FileError& e) {
    return report(err, missing_input, "missing_input", e.what());
  } catch (const CLI::ExcludesError& e) {
    return report(err, config_conflict, "config_conflict", e.what());
  } catch (const CLI::ParseError& e) {
    return report(err, usage, "usage", e.what());
  }

  try {
    if (s_est->parsed()) run_estimate(est, s_est, out);
    else if (s_flt->parsed()) run_filter(flt, s_flt, out);
    else if (s_ext->parsed()) run_extract(ext, s_ext, out);
    else if (s_lp->parsed()) run_lp_cmd(lp, s_lp, out);
    else if (s_dec->parsed()) run_decompose(dec, s_dec, out);
    else if (s_sim->parsed()) run_simulate(sim, s_sim, out);
    else if (s_ll->parsed()) run_leadlag(ll, s_ll, out);
  } catch (const Failure& e) {
    return report(err, e.code, e.name, e.what());
  } catch (const ConfigError& e) {
    return report(err, config_conflict, "config", e.what());
  } catch (const NumericalError& e) {
    return report(err, numerical_error, "numerical", e.what());
  } catch (const DataError& e) {
    return report(err, data_error, "data", e.what());
  } catch (const DimensionError& e) {
    return report(err, data_error, "dimension", e.what());
  } catch (const std::exception& e) {
    return report(err, internal_error, "internal", e.what());
  }
  return ok;
}

int dispatch(int argc, char** argv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return dispatch(args, out, err);
}

}  // namespace creditvol::cli
