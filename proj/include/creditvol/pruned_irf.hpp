#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace creditvol {

// Calibration of the collateral-constraint RBC model. Only the borrowing
// bound is computed here; the perturbation coefficients are supplied.
struct RbcCalibration {
  double alpha = 0.33;
  double beta_disc = 0.99;
  double delta = 0.02;
  double phi_adj = 4.0;
  double theta_labor = 5.7241;
  double gamma_c = 1.0;
  double chi = 1.0;
  double zeta_ss = 0.017;
  double h_bar = -10.12;
  double rho_h = 0.91;
  double tau = 0.25;
  double rho_ar = 0.83;
  double nu = 0.0;
  double theta_r = 5.7241;

  void validate() const;
};

struct ZetaBound {
  double bound = 0.0;       // ((1 - alpha) / alpha) * (1 / beta - (1 - delta))
  bool admissible = false;  // zeta_ss < bound
  double published = 0.0602;
  double discrepancy = 0.0;  // bound - published
};

ZetaBound zeta_ss_bound(const RbcCalibration& c);

// Pruned third-order state space with n_x states, n_y controls and the two
// shocks (eps_zeta, eta_star). With z_t = [x^f_{t-1}; eps_zeta_t; eta_star_t]
// the regressor blocks are
//
//   v1(z) = z                                                   (n_x + 2)
//   v2(z) = [x(x)x, x(x)e, x(x)n, ee, en, nn]                   (n_x^2 + 2 n_x + 3)
//   v3(z) = [x(x)x(x)x, x(x)x(x)e, x(x)x(x)n, x(x)e(x)e,
//            x(x)e(x)n, x(x)n(x)n, eee, een, enn, nnn]          (n_x^3 + 2 n_x^2 + 3 n_x + 4)
//
// where x = x^f_{t-1}, e = eps_zeta, n = eta_star and Kronecker products of
// x are ordered with the last factor varying fastest. The recursion is
//
//   x^f_t = h_v z_t
//   x^s_t = h_v [x^s_{t-1}; 0] + 2 H_vv v2(z_t)
//   x^r_t = h_v [x^r_{t-1}; 0] + H_vvv v3(z_t) + (3/6) h_ssv z_t + (1/6) h_sss sigma^2
//
// and the controls use the g-blocks on the same regressors. States and
// controls are x^f + x^s + x^r and y^f + y^s + y^r.
struct PrunedSolution {
  std::vector<std::string> state_labels;
  std::vector<std::string> control_labels;
  Eigen::MatrixXd h_v, H_vv, H_vvv, h_ssv;
  Eigen::VectorXd h_sss;
  Eigen::MatrixXd g_v, G_vv, G_vvv, g_ssv;
  Eigen::VectorXd g_sss;
  double sigma = 1.0;
  // Optional steady-state levels. A NaN (or a missing vector) marks a
  // variable already measured in log deviations.
  Eigen::VectorXd state_steady_state;
  Eigen::VectorXd control_steady_state;

  std::size_t n_states() const { return state_labels.size(); }
  std::size_t n_controls() const { return control_labels.size(); }
  // Empty matrices are treated as zero blocks; anything else must match.
  void validate() const;

  // Zero-initialized solution of the right shape.
  static PrunedSolution zeros(std::vector<std::string> states, std::vector<std::string> controls);
};

std::size_t first_order_size(std::size_t n_x);
std::size_t second_order_size(std::size_t n_x);
std::size_t third_order_size(std::size_t n_x);
// Column of v3 holding eps_zeta * eps_zeta * eta_star.
std::size_t eps_eps_eta_column(std::size_t n_x);
// Column of v1 holding eta_star.
std::size_t eta_column(std::size_t n_x);

enum class MomentMode {
  realized,  // shocks enter as given
  expected   // eps_zeta monomials replaced by E e = 0, E e^2 = 1, E e^3 = 0
};

struct ShockPair {
  double eps_zeta = 0.0;
  double eta_star = 0.0;
};

Eigen::VectorXd first_order_regressors(const Eigen::VectorXd& x_f, ShockPair s, MomentMode m = MomentMode::realized);
Eigen::VectorXd second_order_regressors(const Eigen::VectorXd& x_f, ShockPair s, MomentMode m = MomentMode::realized);
Eigen::VectorXd third_order_regressors(const Eigen::VectorXd& x_f, ShockPair s, MomentMode m = MomentMode::realized);

struct PrunedState {
  Eigen::VectorXd first, second, third;
  static PrunedState zero(std::size_t n_x);
  Eigen::VectorXd total() const { return first + second + third; }
};

struct PrunedStep {
  PrunedState next;
  PrunedState controls;  // first/second/third-order control components
};

PrunedStep pruned_step(const PrunedSolution& sol, const PrunedState& state, ShockPair shocks,
                       MomentMode mode = MomentMode::realized);

enum class IrfStart { stochastic_steady_state, zero };

struct IrfOptions {
  IrfStart start = IrfStart::stochastic_steady_state;
  MomentMode moments = MomentMode::realized;
  std::size_t max_iterations = 100000;
  double tolerance = 1e-13;
};

// Fixed point of pruned_step under zero shocks.
PrunedState stochastic_steady_state(const PrunedSolution& sol, const IrfOptions& opt = {});

struct IrfPaths {
  std::vector<std::string> variables;  // states then controls
  Eigen::MatrixXd values;              // horizon x variables
};

enum class ShockName { eps_zeta, eta_star };
ShockName shock_name_from_string(const std::string& s);

// Shocked minus baseline path, shock of `size` standard deviations at t = 0.
// Variables with a steady-state level are reported in percent of their
// baseline level; log-deviation variables are reported as-is.
IrfPaths irf(const PrunedSolution& sol, ShockName shock, double size, std::size_t horizon,
             const IrfOptions& opt = {});

struct DecompositionRow {
  std::string variable;
  double direct;
  double interaction;
  double total;
};

// Impact effect of eta_star at x^f_{t-1} = 0:
//   direct      = (3/6) * ssv[:, eta] * eta_star
//   interaction = third-order coefficient on eps*eps*eta * eta_star   (E eps^2 = 1)
std::vector<DecompositionRow> decompose_impact(const PrunedSolution& sol, double eta_star);

// Structured text format, see docs/solution_format.md.
PrunedSolution read_solution(std::istream& in);
PrunedSolution read_solution(const std::filesystem::path& path);
void write_solution(std::ostream& out, const PrunedSolution& sol);

}  // namespace creditvol
