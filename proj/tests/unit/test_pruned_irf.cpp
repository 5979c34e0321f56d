#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "creditvol/errors.hpp"
#include "creditvol/pruned_irf.hpp"
#include "stats.hpp"

using namespace creditvol;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

const std::string kTable3 = std::string(CREDITVOL_TEST_DATA) + "/table3_solution.txt";

PrunedSolution random_solution(std::mt19937_64& gen, std::size_t nx, std::size_t ny, double scale) {
  std::vector<std::string> s, c;
  for (std::size_t i = 0; i < nx; ++i) s.push_back("x" + std::to_string(i));
  for (std::size_t i = 0; i < ny; ++i) c.push_back("y" + std::to_string(i));
  PrunedSolution sol = PrunedSolution::zeros(s, c);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  auto fill = [&](MatrixXd& m, double k) {
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = k * u(gen);
  };
  fill(sol.h_v, 1.0);
  // Keep the transition block stable.
  const auto n = static_cast<Eigen::Index>(nx);
  Eigen::EigenSolver<MatrixXd> es(sol.h_v.leftCols(n));
  const double radius = es.eigenvalues().cwiseAbs().maxCoeff();
  sol.h_v.leftCols(n) *= 0.8 / radius;
  fill(sol.H_vv, scale);
  fill(sol.H_vvv, scale);
  fill(sol.h_ssv, scale);
  for (Eigen::Index i = 0; i < sol.h_sss.size(); ++i) sol.h_sss(i) = scale * u(gen);
  fill(sol.g_v, 1.0);
  fill(sol.G_vv, scale);
  fill(sol.G_vvv, scale);
  fill(sol.g_ssv, scale);
  for (Eigen::Index i = 0; i < sol.g_sss.size(); ++i) sol.g_sss(i) = scale * u(gen);
  sol.sigma = 0.7;
  return sol;
}

// Reference implementation written with explicit factor lists. Factor codes:
// 0..n-1 are the lagged first-order states, n is eps_zeta, n+1 is eta_star.
struct Oracle {
  const PrunedSolution& sol;
  bool expected;

  double monomial(const std::vector<std::size_t>& f, const std::vector<double>& z) const {
    const std::size_t n = sol.n_states();
    double p = 1.0;
    int eps_power = 0;
    for (std::size_t k : f) {
      if (k == n) {
        ++eps_power;
      } else {
        p *= z[k];
      }
    }
    if (expected) {
      static const double m[] = {1.0, 0.0, 1.0, 0.0};
      return p * m[eps_power];
    }
    return p * std::pow(z[n], eps_power);
  }

  std::vector<std::vector<std::size_t>> second_factors() const {
    const std::size_t n = sol.n_states(), e = n, h = n + 1;
    std::vector<std::vector<std::size_t>> f;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) f.push_back({i, j});
    for (std::size_t i = 0; i < n; ++i) f.push_back({i, e});
    for (std::size_t i = 0; i < n; ++i) f.push_back({i, h});
    f.push_back({e, e});
    f.push_back({e, h});
    f.push_back({h, h});
    return f;
  }

  std::vector<std::vector<std::size_t>> third_factors() const {
    const std::size_t n = sol.n_states(), e = n, h = n + 1;
    std::vector<std::vector<std::size_t>> f;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        for (std::size_t l = 0; l < n; ++l) f.push_back({i, j, l});
    for (std::size_t tail : {e, h})
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) f.push_back({i, j, tail});
    for (auto pair : {std::pair{e, e}, std::pair{e, h}, std::pair{h, h}})
      for (std::size_t i = 0; i < n; ++i) f.push_back({i, pair.first, pair.second});
    f.push_back({e, e, e});
    f.push_back({e, e, h});
    f.push_back({e, h, h});
    f.push_back({h, h, h});
    return f;
  }

  // One step; returns (next states xf, xs, xr, control total).
  void step(std::vector<double>& xf, std::vector<double>& xs, std::vector<double>& xr,
            std::vector<double>& y, double eps, double eta) const {
    const std::size_t n = sol.n_states(), m = sol.n_controls();
    std::vector<double> z(xf);
    z.push_back(eps);
    z.push_back(eta);
    std::vector<double> v1(n + 2);
    for (std::size_t k = 0; k < n + 2; ++k) v1[k] = monomial({k}, z);
    std::vector<double> v2, v3;
    for (const auto& f : second_factors()) v2.push_back(monomial(f, z));
    for (const auto& f : third_factors()) v3.push_back(monomial(f, z));
    const double s2 = sol.sigma * sol.sigma;

    auto layer = [&](const MatrixXd& lin, const MatrixXd& quad, const MatrixXd& cub,
                     const MatrixXd& ssv, const VectorXd& sss, std::size_t rows,
                     std::vector<double>& f_out, std::vector<double>& s_out,
                     std::vector<double>& r_out) {
      f_out.assign(rows, 0.0);
      s_out.assign(rows, 0.0);
      r_out.assign(rows, 0.0);
      for (std::size_t i = 0; i < rows; ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        for (std::size_t k = 0; k < n + 2; ++k) f_out[i] += lin(r, static_cast<Eigen::Index>(k)) * v1[k];
        for (std::size_t k = 0; k < n; ++k) {
          s_out[i] += lin(r, static_cast<Eigen::Index>(k)) * xs[k];
          r_out[i] += lin(r, static_cast<Eigen::Index>(k)) * xr[k];
        }
        for (std::size_t k = 0; k < v2.size(); ++k) s_out[i] += 2.0 * quad(r, static_cast<Eigen::Index>(k)) * v2[k];
        for (std::size_t k = 0; k < v3.size(); ++k) r_out[i] += cub(r, static_cast<Eigen::Index>(k)) * v3[k];
        for (std::size_t k = 0; k < n + 2; ++k) r_out[i] += 0.5 * ssv(r, static_cast<Eigen::Index>(k)) * v1[k];
        r_out[i] += s2 / 6.0 * sss(r);
      }
    };
    std::vector<double> nf, ns, nr, yf, ys, yr;
    layer(sol.h_v, sol.H_vv, sol.H_vvv, sol.h_ssv, sol.h_sss, n, nf, ns, nr);
    layer(sol.g_v, sol.G_vv, sol.G_vvv, sol.g_ssv, sol.g_sss, m, yf, ys, yr);
    xf = nf;
    xs = ns;
    xr = nr;
    y.assign(m, 0.0);
    for (std::size_t i = 0; i < m; ++i) y[i] = yf[i] + ys[i] + yr[i];
  }
};

double max_abs_diff(const VectorXd& a, const std::vector<double>& b) {
  double d = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a(i) - b[static_cast<std::size_t>(i)]));
  return d;
}

}  // namespace

TEST_SUITE("pruned_irf") {
  TEST_CASE("borrowing bound") {
    RbcCalibration c;
    const ZetaBound b = zeta_ss_bound(c);
    const double expected = (0.67 / 0.33) * (1.0 / 0.99 - 0.98);
    CHECK(b.bound == doctest::Approx(expected).epsilon(1e-15));
    CHECK(b.bound == doctest::Approx(0.061114).epsilon(1e-5));
    CHECK(b.admissible);
    CHECK(b.published == 0.0602);
    CHECK(b.discrepancy == doctest::Approx(b.bound - 0.0602));

    RbcCalibration d;
    d.alpha = 0.5;
    d.beta_disc = 1.0;
    CHECK(zeta_ss_bound(d).bound == doctest::Approx(d.delta).epsilon(1e-15));

    RbcCalibration tight = c;
    tight.zeta_ss = 0.07;
    CHECK_FALSE(zeta_ss_bound(tight).admissible);
    RbcCalibration bad = c;
    bad.alpha = 1.0;
    CHECK_THROWS_AS(zeta_ss_bound(bad), ConfigError);
  }

  TEST_CASE("regressor sizes and named columns") {
    CHECK(first_order_size(3) == 5);
    CHECK(second_order_size(3) == 18);
    CHECK(third_order_size(3) == 58);
    CHECK(eta_column(3) == 4);
    CHECK(eps_eps_eta_column(3) == 55);
    const VectorXd x = VectorXd::Zero(3);
    const VectorXd v3 = third_order_regressors(x, {2.0, 3.0});
    CHECK(v3(static_cast<Eigen::Index>(eps_eps_eta_column(3))) == 12.0);
    CHECK(v3.sum() == 8.0 + 12.0 + 18.0 + 27.0);
    const VectorXd v3e = third_order_regressors(x, {2.0, 3.0}, MomentMode::expected);
    CHECK(v3e(static_cast<Eigen::Index>(eps_eps_eta_column(3))) == 3.0);
    CHECK(v3e.sum() == 3.0 + 27.0);
  }

  TEST_CASE("zero state with zero shocks moves only through the risk term") {
    std::mt19937_64 gen(11);
    const PrunedSolution sol = random_solution(gen, 3, 2, 0.1);
    const PrunedStep s = pruned_step(sol, PrunedState::zero(3), {});
    CHECK(s.next.first.cwiseAbs().maxCoeff() == 0.0);
    CHECK(s.next.second.cwiseAbs().maxCoeff() == 0.0);
    const VectorXd expect = sol.h_sss * (sol.sigma * sol.sigma / 6.0);
    CHECK((s.next.third - expect).cwiseAbs().maxCoeff() < 1e-15);
  }

  TEST_CASE("linear solution reduces to the first-order recursion") {
    std::mt19937_64 gen(12);
    PrunedSolution sol = random_solution(gen, 3, 2, 0.0);
    PrunedState st = PrunedState::zero(3);
    VectorXd x = VectorXd::Zero(3);
    std::normal_distribution<double> d;
    for (int t = 0; t < 20; ++t) {
      const ShockPair s{d(gen), d(gen)};
      VectorXd z(5);
      z << x, s.eps_zeta, s.eta_star;
      const PrunedStep step = pruned_step(sol, st, s);
      const VectorXd y = sol.g_v * z;
      x = sol.h_v * z;
      CHECK((step.next.total() - x).cwiseAbs().maxCoeff() < 1e-14);
      CHECK((step.controls.total() - y).cwiseAbs().maxCoeff() < 1e-14);
      st = step.next;
    }
  }

  TEST_CASE("pruned step matches the factor-list oracle over 50 steps") {
    for (MomentMode mode : {MomentMode::realized, MomentMode::expected}) {
      std::mt19937_64 gen(mode == MomentMode::realized ? 21 : 22);
      const PrunedSolution sol = random_solution(gen, 3, 4, 0.2);
      const Oracle oracle{sol, mode == MomentMode::expected};
      PrunedState st = PrunedState::zero(3);
      std::vector<double> xf(3, 0.0), xs(3, 0.0), xr(3, 0.0), y;
      std::normal_distribution<double> d;
      double worst = 0.0;
      for (int t = 0; t < 50; ++t) {
        const ShockPair s{d(gen), d(gen)};
        const PrunedStep step = pruned_step(sol, st, s, mode);
        oracle.step(xf, xs, xr, y, s.eps_zeta, s.eta_star);
        worst = std::max({worst, max_abs_diff(step.next.first, xf), max_abs_diff(step.next.second, xs),
                          max_abs_diff(step.next.third, xr), max_abs_diff(step.controls.total(), y)});
        st = step.next;
      }
      CHECK(worst < 1e-12);
    }
  }

  TEST_CASE("impulse responses") {
    std::mt19937_64 gen(31);
    const PrunedSolution sol = random_solution(gen, 3, 2, 0.1);
    const IrfPaths zero = irf(sol, ShockName::eta_star, 0.0, 12);
    CHECK(zero.values.cwiseAbs().maxCoeff() == 0.0);
    CHECK(zero.variables.size() == 5);
    CHECK(zero.variables.front() == "x0");
    CHECK(zero.variables.back() == "y1");

    const PrunedSolution lin = random_solution(gen, 3, 2, 0.0);
    for (ShockName which : {ShockName::eps_zeta, ShockName::eta_star}) {
      const IrfPaths p = irf(lin, which, 1.5, 10);
      const Eigen::Index col = which == ShockName::eps_zeta ? 3 : 4;
      VectorXd x = 1.5 * lin.h_v.col(col);
      VectorXd y = 1.5 * lin.g_v.col(col);
      for (Eigen::Index t = 0; t < 10; ++t) {
        CHECK((p.values.row(t).head(3).transpose() - x).cwiseAbs().maxCoeff() < 1e-13);
        CHECK((p.values.row(t).tail(2).transpose() - y).cwiseAbs().maxCoeff() < 1e-13);
        y = lin.g_v.leftCols(3) * x;
        x = lin.h_v.leftCols(3) * x;
      }
    }
    CHECK_THROWS_AS(irf(sol, ShockName::eta_star, 1.0, 0), ConfigError);
    CHECK_THROWS_AS(shock_name_from_string("beta"), ConfigError);
  }

  TEST_CASE("percent deviations use the baseline level") {
    std::mt19937_64 gen(32);
    PrunedSolution sol = random_solution(gen, 2, 1, 0.0);
    const IrfPaths raw = irf(sol, ShockName::eps_zeta, 1.0, 5);
    sol.state_steady_state = VectorXd::Constant(2, 4.0);
    sol.state_steady_state(1) = std::numeric_limits<double>::quiet_NaN();
    sol.control_steady_state = VectorXd::Constant(1, 2.0);
    const IrfPaths pct = irf(sol, ShockName::eps_zeta, 1.0, 5);
    for (Eigen::Index t = 0; t < 5; ++t) {
      CHECK(pct.values(t, 0) == doctest::Approx(25.0 * raw.values(t, 0)));
      CHECK(pct.values(t, 1) == raw.values(t, 1));
      CHECK(pct.values(t, 2) == doctest::Approx(50.0 * raw.values(t, 2)));
    }
  }

  TEST_CASE("stochastic steady state is a fixed point") {
    std::mt19937_64 gen(33);
    const PrunedSolution sol = random_solution(gen, 3, 2, 0.1);
    const PrunedState ss = stochastic_steady_state(sol);
    const PrunedState again = pruned_step(sol, ss, {}).next;
    CHECK((again.total() - ss.total()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(ss.first.cwiseAbs().maxCoeff() == 0.0);
  }

  TEST_CASE("long zero-shock simulation stays bounded") {
    for (std::uint64_t seed = 40; seed < 45; ++seed) {
      std::mt19937_64 gen(seed);
      const PrunedSolution sol = random_solution(gen, 4, 3, 0.3);
      PrunedState st = PrunedState::zero(4);
      st.first = VectorXd::Constant(4, 1.0);
      double peak = 0.0;
      for (int t = 0; t < 10000; ++t) {
        st = pruned_step(sol, st, {}).next;
        peak = std::max(peak, st.total().cwiseAbs().maxCoeff());
      }
      CHECK(std::isfinite(peak));
      CHECK(peak < 1e3);
      CHECK(st.first.cwiseAbs().maxCoeff() < 1e-100);
    }
  }

  TEST_CASE("decomposition examples") {
    PrunedSolution sol = PrunedSolution::zeros({"k", "s"}, {"consumption", "hours"});
    const auto eta = static_cast<Eigen::Index>(eta_column(2));
    const auto een = static_cast<Eigen::Index>(eps_eps_eta_column(2));
    sol.g_ssv(0, eta) = 2.0 * -0.099;
    sol.G_vvv(0, een) = -0.081;
    sol.g_ssv(1, eta) = 2.0 * 0.058;
    sol.G_vvv(1, een) = -0.794;
    const auto rows = decompose_impact(sol, 1.0);
    REQUIRE(rows.size() == 4);
    CHECK(rows[0].variable == "k");
    CHECK(rows[2].variable == "consumption");
    CHECK(rows[2].direct == doctest::Approx(-0.099).epsilon(1e-15));
    CHECK(rows[2].interaction == doctest::Approx(-0.081).epsilon(1e-15));
    CHECK(rows[2].total == rows[2].direct + rows[2].interaction);
    CHECK(std::abs(rows[2].total - -0.179) <= 0.0015);
    CHECK(rows[3].total == doctest::Approx(-0.736).epsilon(1e-12));

    // No third-order interactions: interaction column vanishes.
    std::mt19937_64 gen(51);
    PrunedSolution r = random_solution(gen, 3, 3, 0.2);
    r.H_vvv.setZero();
    r.G_vvv.setZero();
    for (const auto& row : decompose_impact(r, 1.3)) CHECK(row.interaction == 0.0);

    PrunedSolution missing = r;
    missing.G_vvv.resize(0, 0);
    CHECK_THROWS_AS(decompose_impact(missing, 1.0), DimensionError);
  }

  TEST_CASE("decomposition is additive and linear in the shock") {
    std::mt19937_64 gen(52);
    const PrunedSolution sol = random_solution(gen, 3, 5, 0.4);
    const auto one = decompose_impact(sol, 1.0);
    const auto two = decompose_impact(sol, 2.0);
    for (std::size_t i = 0; i < one.size(); ++i) {
      CHECK(one[i].total == one[i].direct + one[i].interaction);
      CHECK(two[i].direct == 2.0 * one[i].direct);
      CHECK(two[i].interaction == 2.0 * one[i].interaction);
    }
  }

  TEST_CASE("decomposition agrees with the simulator on impact") {
    // Holds when eta_star enters on impact only through ssv and the
    // eps*eps*eta column, starting from zero with expected eps moments.
    std::mt19937_64 gen(53);
    PrunedSolution sol = random_solution(gen, 3, 4, 0.3);
    const std::size_t nx = 3;
    const auto eta = static_cast<Eigen::Index>(eta_column(nx));
    const auto een = static_cast<Eigen::Index>(eps_eps_eta_column(nx));
    sol.h_v.col(eta).setZero();
    sol.g_v.col(eta).setZero();
    // Every second- and third-order column that contains eta, other than een.
    const auto v2 = second_order_regressors(VectorXd::Constant(3, 1.0), {1.0, 7.0});
    for (Eigen::Index k = 0; k < v2.size(); ++k) {
      if (std::fmod(v2(k), 7.0) == 0.0) {
        sol.H_vv.col(k).setZero();
        sol.G_vv.col(k).setZero();
      }
    }
    const auto v3 = third_order_regressors(VectorXd::Constant(3, 1.0), {1.0, 7.0});
    for (Eigen::Index k = 0; k < v3.size(); ++k) {
      if (k != een && std::fmod(v3(k), 7.0) == 0.0) {
        sol.H_vvv.col(k).setZero();
        sol.G_vvv.col(k).setZero();
      }
    }
    IrfOptions opt;
    opt.start = IrfStart::zero;
    opt.moments = MomentMode::expected;
    for (double size : {1.0, -0.5, 2.5}) {
      const IrfPaths p = irf(sol, ShockName::eta_star, size, 1, opt);
      const auto rows = decompose_impact(sol, size);
      REQUIRE(rows.size() == static_cast<std::size_t>(p.values.cols()));
      for (std::size_t j = 0; j < rows.size(); ++j) {
        CHECK(std::abs(rows[j].total - p.values(0, static_cast<Eigen::Index>(j))) < 1e-10);
      }
    }
  }

  TEST_CASE("published decomposition fixture") {
    const PrunedSolution sol = read_solution(kTable3);
    CHECK(sol.n_states() == 3);
    CHECK(sol.n_controls() == 9);
    const auto rows = decompose_impact(sol, 1.0);
    auto find = [&](const std::string& name) {
      for (const auto& r : rows)
        if (r.variable == name) return r;
      FAIL("missing row " << name);
      return rows.front();
    };
    CHECK(find("consumption").direct == doctest::Approx(-0.099).epsilon(1e-14));
    CHECK(find("investment").interaction == doctest::Approx(-1.302).epsilon(1e-14));

    IrfOptions opt;
    opt.start = IrfStart::zero;
    opt.moments = MomentMode::expected;
    const IrfPaths p = irf(sol, ShockName::eta_star, 1.0, 8, opt);
    for (const char* name : {"consumption", "investment", "gdp", "hours"}) {
      const auto it = std::find(p.variables.begin(), p.variables.end(), name);
      REQUIRE(it != p.variables.end());
      const auto j = static_cast<Eigen::Index>(it - p.variables.begin());
      CHECK_MESSAGE(p.values(0, j) < 0.0, name);
      CHECK(std::abs(p.values(0, j) - find(name).total) < 1e-10);
    }
  }

  TEST_CASE("solution file round trip") {
    std::mt19937_64 gen(61);
    PrunedSolution sol = random_solution(gen, 2, 3, 0.2);
    sol.control_steady_state = VectorXd::Constant(3, 1.5);
    sol.control_steady_state(2) = std::numeric_limits<double>::quiet_NaN();
    std::stringstream ss;
    write_solution(ss, sol);
    const PrunedSolution back = read_solution(ss);
    CHECK(back.state_labels == sol.state_labels);
    CHECK(back.control_labels == sol.control_labels);
    CHECK(back.sigma == sol.sigma);
    CHECK(back.h_v == sol.h_v);
    CHECK(back.H_vvv == sol.H_vvv);
    CHECK(back.G_vv == sol.G_vv);
    CHECK(back.g_sss == sol.g_sss);
    CHECK(back.control_steady_state(0) == 1.5);
    CHECK(std::isnan(back.control_steady_state(2)));
    CHECK(back.state_steady_state.size() == 0);
  }

  TEST_CASE("malformed solution files") {
    auto parse = [](const std::string& text) {
      std::istringstream in(text);
      return read_solution(in);
    };
    CHECK_NOTHROW(parse("states 1 k\ncontrols 0\nmatrix h_v 1 3\n0.5 1 0\n"));
    CHECK_THROWS_AS(parse("controls 1 c\n"), DataError);
    CHECK_THROWS_AS(parse("states 1 k\nmatrix h_v 1 3\n0.5 1\n"), DataError);
    CHECK_THROWS_AS(parse("states 1 k\nmatrix h_v 1 3\n0.5 x 0\n"), DataError);
    CHECK_THROWS_AS(parse("states 1 k\nmatrix q_v 1 3\n0.5 1 0\n"), DataError);
    CHECK_THROWS_AS(parse("states 1 k\nbogus\n"), DataError);
    CHECK_THROWS_AS(parse("states 1 k\nmatrix h_v 1 2\n0.5 1\n"), DimensionError);
    try {
      parse("states 1 k\n# comment\nmatrix h_v 1 3\n0.5 oops 0\n");
      FAIL("expected a DataError");
    } catch (const DataError& e) {
      CHECK(e.row() == 4);
    }
    CHECK_THROWS_AS(read_solution(std::filesystem::path("/nonexistent/solution.txt")), DataError);
  }
}
