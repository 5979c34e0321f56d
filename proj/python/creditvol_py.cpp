#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "creditvol/errors.hpp"
#include "creditvol/local_projections.hpp"
#include "creditvol/particle_filter.hpp"
#include "creditvol/pmmh.hpp"
#include "creditvol/pruned_irf.hpp"
#include "creditvol/rng.hpp"
#include "creditvol/sv_model.hpp"
#include "creditvol/timeseries.hpp"

namespace py = pybind11;
using namespace creditvol;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

std::vector<double> to_vector(const Array& a) {
  if (a.ndim() != 1) throw py::value_error("expected a one-dimensional array");
  return {a.data(), a.data() + a.size()};
}

Array to_array(const std::vector<double>& v) {
  return Array(std::vector<py::ssize_t>{static_cast<py::ssize_t>(v.size())}, v.data());
}

Array to_matrix(const std::vector<double>& v, std::size_t rows, std::size_t cols) {
  return Array(std::vector<py::ssize_t>{static_cast<py::ssize_t>(rows), static_cast<py::ssize_t>(cols)},
               v.data());
}

PriorSpec prior_from(const std::string& name) {
  return prior_variant_from_string(name) == PriorVariant::baseline ? PriorSpec::baseline()
                                                                   : PriorSpec::robustness();
}

py::dict state_dict(const PrunedState& s) {
  py::dict d;
  d["first"] = s.first;
  d["second"] = s.second;
  d["third"] = s.third;
  return d;
}

PrunedState state_from(const py::dict& d) {
  return {d["first"].cast<Eigen::VectorXd>(), d["second"].cast<Eigen::VectorXd>(),
          d["third"].cast<Eigen::VectorXd>()};
}

MomentMode moment_mode(const std::string& s) {
  if (s == "realized") return MomentMode::realized;
  if (s == "expected") return MomentMode::expected;
  throw ConfigError("moments must be 'realized' or 'expected'");
}

}  // namespace

PYBIND11_MODULE(_creditvol, m) {
  m.doc() = "Stochastic volatility with leverage, local projections and pruned impulse responses";
  m.attr("__version__") = CREDITVOL_VERSION;

  auto error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<DataError>(m, "DataError", error.ptr());
  py::register_exception<DimensionError>(m, "DimensionError", error.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", error.ptr());
  auto numerical = py::register_exception<NumericalError>(m, "NumericalError", error.ptr());
  py::register_exception<FilterFailure>(m, "FilterFailure", numerical.ptr());

  m.def("derive_seed", py::overload_cast<std::uint64_t, std::string_view>(&derive_seed), py::arg("seed"),
        py::arg("tag"));

  py::class_<SvParams>(m, "SvParams")
      .def(py::init([](double mu_h, double phi_y, double phi_h, double tau, double rho) {
             SvParams p{mu_h, phi_y, phi_h, tau, rho};
             p.validate();
             return p;
           }),
           py::arg("mu_h"), py::arg("phi_y"), py::arg("phi_h"), py::arg("tau"), py::arg("rho"))
      .def_readwrite("mu_h", &SvParams::mu_h)
      .def_readwrite("phi_y", &SvParams::phi_y)
      .def_readwrite("phi_h", &SvParams::phi_h)
      .def_readwrite("tau", &SvParams::tau)
      .def_readwrite("rho", &SvParams::rho)
      .def("__eq__", [](const SvParams& a, const SvParams& b) { return a == b; })
      .def("__repr__", [](const SvParams& p) {
        return "SvParams(mu_h=" + std::to_string(p.mu_h) + ", phi_y=" + std::to_string(p.phi_y) +
               ", phi_h=" + std::to_string(p.phi_h) + ", tau=" + std::to_string(p.tau) +
               ", rho=" + std::to_string(p.rho) + ")";
      });

  m.def("growth_rate_demeaned",
        [](const Array& levels) {
          const auto ts = TimeSeries::from_values(to_vector(levels));
          const auto g = growth_rate_demeaned(ts);
          return to_array({g.values().begin(), g.values().end()});
        },
        py::arg("levels"), "100 x log growth minus its sample mean.");

  m.def("simulate",
        [](const SvParams& p, std::size_t T, std::uint64_t seed) {
          const SvSimulation s = simulate(p, T, seed);
          py::dict d;
          d["y"] = to_array({s.y.values().begin(), s.y.values().end()});
          d["h"] = to_array(s.h.h);
          d["eps"] = to_array(s.shocks.eps);
          d["eta"] = to_array(s.shocks.eta);
          d["eta_star"] = to_array(s.shocks.eta_star);
          return d;
        },
        py::arg("params"), py::arg("T"), py::arg("seed"));

  m.def("extract_shocks",
        [](const Array& y, const Array& h, const SvParams& p) {
          const auto yv = to_vector(y);
          const ShockSet s = extract_shocks(yv, LatentPath{to_vector(h)}, p);
          py::dict d;
          d["eps"] = to_array(s.eps);
          d["eta"] = to_array(s.eta);
          d["eta_star"] = to_array(s.eta_star);
          return d;
        },
        py::arg("y"), py::arg("h"), py::arg("params"));

  m.def("particle_filter",
        [](const Array& y, const SvParams& p, std::size_t particles, std::uint64_t seed, double gamma,
           std::uint64_t fresh_seed) {
          const auto yv = to_vector(y);
          SeedBlock u = make_seed_block(yv.size(), particles, seed);
          if (gamma < 1.0) u = correlate_seed(u, gamma, fresh_seed);
          ParticleSystem ps;
          {
            py::gil_scoped_release release;
            ps = correlated_pf(yv, p, u, particles);
          }
          std::vector<double> ess(ps.T);
          for (std::size_t t = 0; t < ps.T; ++t) ess[t] = ps.ess(t);
          py::dict d;
          d["loglik"] = ps.loglik;
          d["loglik_terms"] = to_array(ps.loglik_terms);
          d["ess"] = to_array(ess);
          d["particles"] = to_matrix(ps.particles, ps.T, ps.N);
          return d;
        },
        py::arg("y"), py::arg("params"), py::arg("particles") = 100, py::arg("seed") = 1, py::arg("gamma") = 1.0,
        py::arg("fresh_seed") = 2,
        "Correlated particle filter. With gamma < 1 the auxiliary normals are\n"
        "gamma * u(seed) + sqrt(1 - gamma^2) * u(fresh_seed).");

  m.def("estimate",
        [](const Array& y, std::size_t iterations, std::size_t burn_in, std::size_t particles, double gamma,
           std::uint64_t seed, const std::string& prior, const std::string& variant) {
          ChainConfig cfg;
          cfg.iterations = iterations;
          cfg.burn_in = burn_in;
          cfg.particles = particles;
          cfg.gamma = gamma;
          cfg.seed = seed;
          cfg.prior = prior_from(prior);
          if (variant == "standard") cfg.variant = SamplerVariant::standard;
          else if (variant != "correlated") throw ConfigError("variant must be 'correlated' or 'standard'");
          cfg.validate();
          const auto yv = to_vector(y);
          PosteriorDraws d;
          {
            py::gil_scoped_release release;
            d = run_chain(yv, cfg);
          }
          std::vector<double> flat;
          for (const auto& p : d.params) flat.insert(flat.end(), {p.mu_h, p.phi_y, p.phi_h, p.tau, p.rho});
          py::dict out;
          out["names"] = std::vector<std::string>(std::begin(kSvParamNames), std::end(kSvParamNames));
          out["draws"] = to_matrix(flat, d.params.size(), 5);
          out["loglik"] = to_array(d.logliks);
          out["acceptance_rate"] = d.acceptance_rate();
          out["post_burn_in_acceptance_rate"] = d.post_burn_in_acceptance_rate();
          out["steplength"] = d.steplength;
          if (!d.latent_paths.empty()) out["volatility_path"] = to_array(posterior_mean_path(d).h);
          return out;
        },
        py::arg("y"), py::arg("iterations") = 15000, py::arg("burn_in") = 5000, py::arg("particles") = 100,
        py::arg("gamma") = 0.99, py::arg("seed") = 1, py::arg("prior") = "baseline",
        py::arg("variant") = "correlated");

  m.def("standardize_shock", [](const Array& s) { return to_array(standardize_shock(to_vector(s))); });
  m.def("white_covariance", &white_covariance, py::arg("X"), py::arg("resid"));
  m.def("newey_west", &newey_west, py::arg("X"), py::arg("resid"), py::arg("lag"));
  m.def("local_projection",
        [](const Array& x, const Array& shock, int horizons, int lags, double band, bool outcome_lags,
           std::optional<Array> indicator) {
          LpSpec spec;
          spec.max_horizon = horizons;
          spec.lag_order = lags;
          spec.band_level = band;
          spec.include_outcome_lags = outcome_lags;
          if (indicator) spec.regime_indicator = TimeSeries::from_values(to_vector(*indicator));
          spec.validate();
          const LpResult r =
              run_lp(TimeSeries::from_values(to_vector(x)), spec, TimeSeries::from_values(to_vector(shock)));
          py::list rows;
          for (const auto& row : r.rows) {
            py::dict d;
            d["horizon"] = row.horizon;
            d["regime"] = to_string(row.regime);
            d["beta"] = row.beta;
            d["se"] = row.se;
            d["lo"] = row.lo;
            d["hi"] = row.hi;
            d["n_obs"] = row.n_obs;
            rows.append(d);
          }
          return py::make_tuple(rows, r.warnings);
        },
        py::arg("x"), py::arg("shock"), py::arg("horizons") = 12, py::arg("lags") = 2, py::arg("band") = 0.68,
        py::arg("outcome_lags") = true, py::arg("indicator") = py::none(),
        "Rows of (horizon, regime, beta, se, lo, hi, n_obs) and the warnings.");

  py::class_<PrunedSolution>(m, "PrunedSolution")
      .def_static("zeros", &PrunedSolution::zeros, py::arg("states"), py::arg("controls"))
      .def_static("read", [](const std::string& path) { return read_solution(std::filesystem::path(path)); })
      .def_readwrite("state_labels", &PrunedSolution::state_labels)
      .def_readwrite("control_labels", &PrunedSolution::control_labels)
      .def_readwrite("h_v", &PrunedSolution::h_v)
      .def_readwrite("H_vv", &PrunedSolution::H_vv)
      .def_readwrite("H_vvv", &PrunedSolution::H_vvv)
      .def_readwrite("h_ssv", &PrunedSolution::h_ssv)
      .def_readwrite("h_sss", &PrunedSolution::h_sss)
      .def_readwrite("g_v", &PrunedSolution::g_v)
      .def_readwrite("G_vv", &PrunedSolution::G_vv)
      .def_readwrite("G_vvv", &PrunedSolution::G_vvv)
      .def_readwrite("g_ssv", &PrunedSolution::g_ssv)
      .def_readwrite("g_sss", &PrunedSolution::g_sss)
      .def_readwrite("sigma", &PrunedSolution::sigma)
      .def("validate", &PrunedSolution::validate);

  m.def("pruned_step",
        [](const PrunedSolution& sol, const py::dict& state, double eps_zeta, double eta_star,
           const std::string& moments) {
          sol.validate();
          const PrunedStep s = pruned_step(sol, state_from(state), {eps_zeta, eta_star}, moment_mode(moments));
          return py::make_tuple(state_dict(s.next), state_dict(s.controls));
        },
        py::arg("solution"), py::arg("state"), py::arg("eps_zeta"), py::arg("eta_star"),
        py::arg("moments") = "realized",
        "Returns (next state, controls), each a dict of first/second/third components.");
  m.def("zero_state", [](std::size_t n) { return state_dict(PrunedState::zero(n)); });

  m.def("irf",
        [](const PrunedSolution& sol, const std::string& shock, double size, std::size_t horizon,
           const std::string& start, const std::string& moments) {
          IrfOptions opt;
          if (start == "zero") opt.start = IrfStart::zero;
          else if (start != "stochastic") throw ConfigError("start must be 'stochastic' or 'zero'");
          opt.moments = moment_mode(moments);
          const IrfPaths p = irf(sol, shock_name_from_string(shock), size, horizon, opt);
          return py::make_tuple(p.variables, p.values);
        },
        py::arg("solution"), py::arg("shock") = "eta_star", py::arg("size") = 1.0, py::arg("horizon") = 40,
        py::arg("start") = "stochastic", py::arg("moments") = "realized");

  m.def("decompose_impact",
        [](const PrunedSolution& sol, double eta_star) {
          py::list rows;
          for (const auto& r : decompose_impact(sol, eta_star))
            rows.append(py::make_tuple(r.variable, r.direct, r.interaction, r.total));
          return rows;
        },
        py::arg("solution"), py::arg("eta_star") = 1.0, "Rows of (variable, direct, interaction, total).");

  m.def("zeta_ss_bound",
        [](double alpha, double beta, double delta, double zeta_ss) {
          RbcCalibration c;
          c.alpha = alpha;
          c.beta_disc = beta;
          c.delta = delta;
          c.zeta_ss = zeta_ss;
          const ZetaBound b = zeta_ss_bound(c);
          py::dict d;
          d["bound"] = b.bound;
          d["admissible"] = b.admissible;
          d["published"] = b.published;
          d["discrepancy"] = b.discrepancy;
          return d;
        },
        py::arg("alpha") = 0.33, py::arg("beta") = 0.99, py::arg("delta") = 0.02, py::arg("zeta_ss") = 0.017);
}
