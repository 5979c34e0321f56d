#include "creditvol/pruned_irf.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>

#include "creditvol/csv.hpp"
#include "creditvol/errors.hpp"

namespace creditvol {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

void check_block(const MatrixXd& m, std::size_t rows, std::size_t cols, const char* name) {
  if (m.size() == 0) return;
  if (static_cast<std::size_t>(m.rows()) != rows || static_cast<std::size_t>(m.cols()) != cols) {
    throw DimensionError(std::string(name) + " is " + std::to_string(m.rows()) + "x" +
                         std::to_string(m.cols()) + ", expected " + std::to_string(rows) + "x" +
                         std::to_string(cols));
  }
}

void check_vector(const VectorXd& v, std::size_t n, const char* name) {
  if (v.size() == 0) return;
  if (static_cast<std::size_t>(v.size()) != n) {
    throw DimensionError(std::string(name) + " has length " + std::to_string(v.size()) +
                         ", expected " + std::to_string(n));
  }
}

// m * v, or zeros when the block is absent.
VectorXd apply(const MatrixXd& m, const VectorXd& v, std::size_t rows) {
  if (m.size() == 0) return VectorXd::Zero(static_cast<Eigen::Index>(rows));
  return m * v;
}

VectorXd or_zero(const VectorXd& v, std::size_t n) {
  return v.size() == 0 ? VectorXd::Zero(static_cast<Eigen::Index>(n)) : v;
}

// [x; 0; 0]
VectorXd pad_state(const VectorXd& x) {
  VectorXd z = VectorXd::Zero(x.size() + 2);
  z.head(x.size()) = x;
  return z;
}

struct EpsMoments {
  double e1, e2, e3;
};

EpsMoments moments(double e, MomentMode m) {
  if (m == MomentMode::expected) return {0.0, 1.0, 0.0};
  return {e, e * e, e * e * e};
}

}  // namespace

void RbcCalibration::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
  if (!(beta_disc > 0.0 && beta_disc < 1.0)) throw ConfigError("beta must lie in (0, 1)");
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("delta must lie in (0, 1)");
  if (!(zeta_ss > 0.0)) throw ConfigError("zeta_ss must be positive");
  if (!(nu >= 0.0 && nu < 1.0)) throw ConfigError("nu must lie in [0, 1)");
}

ZetaBound zeta_ss_bound(const RbcCalibration& c) {
  // Only the three structural parameters enter; beta = 1 is a legitimate
  // limit of the formula.
  if (!(c.alpha > 0.0 && c.alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
  if (!(c.beta_disc > 0.0 && c.beta_disc <= 1.0)) throw ConfigError("beta must lie in (0, 1]");
  if (!(c.delta > 0.0 && c.delta < 1.0)) throw ConfigError("delta must lie in (0, 1)");
  ZetaBound b;
  b.bound = (1.0 - c.alpha) / c.alpha * (1.0 / c.beta_disc - (1.0 - c.delta));
  b.admissible = c.zeta_ss < b.bound;
  b.discrepancy = b.bound - b.published;
  return b;
}

std::size_t first_order_size(std::size_t n) { return n + 2; }
std::size_t second_order_size(std::size_t n) { return n * n + 2 * n + 3; }
std::size_t third_order_size(std::size_t n) { return n * n * n + 2 * n * n + 3 * n + 4; }
std::size_t eps_eps_eta_column(std::size_t n) { return n * n * n + 2 * n * n + 3 * n + 1; }
std::size_t eta_column(std::size_t n) { return n + 1; }

void PrunedSolution::validate() const {
  const std::size_t nx = n_states();
  const std::size_t ny = n_controls();
  if (nx == 0) throw DimensionError("solution has no state variables");
  check_block(h_v, nx, first_order_size(nx), "h_v");
  check_block(H_vv, nx, second_order_size(nx), "H_vv");
  check_block(H_vvv, nx, third_order_size(nx), "H_vvv");
  check_block(h_ssv, nx, first_order_size(nx), "h_ssv");
  check_vector(h_sss, nx, "h_sss");
  check_block(g_v, ny, first_order_size(nx), "g_v");
  check_block(G_vv, ny, second_order_size(nx), "G_vv");
  check_block(G_vvv, ny, third_order_size(nx), "G_vvv");
  check_block(g_ssv, ny, first_order_size(nx), "g_ssv");
  check_vector(g_sss, ny, "g_sss");
  check_vector(state_steady_state, nx, "state_steady_state");
  check_vector(control_steady_state, ny, "control_steady_state");
}

PrunedSolution PrunedSolution::zeros(std::vector<std::string> states,
                                     std::vector<std::string> controls) {
  PrunedSolution s;
  s.state_labels = std::move(states);
  s.control_labels = std::move(controls);
  const auto nx = static_cast<Eigen::Index>(s.state_labels.size());
  const auto ny = static_cast<Eigen::Index>(s.control_labels.size());
  const auto n1 = static_cast<Eigen::Index>(first_order_size(s.state_labels.size()));
  const auto n2 = static_cast<Eigen::Index>(second_order_size(s.state_labels.size()));
  const auto n3 = static_cast<Eigen::Index>(third_order_size(s.state_labels.size()));
  s.h_v = MatrixXd::Zero(nx, n1);
  s.H_vv = MatrixXd::Zero(nx, n2);
  s.H_vvv = MatrixXd::Zero(nx, n3);
  s.h_ssv = MatrixXd::Zero(nx, n1);
  s.h_sss = VectorXd::Zero(nx);
  s.g_v = MatrixXd::Zero(ny, n1);
  s.G_vv = MatrixXd::Zero(ny, n2);
  s.G_vvv = MatrixXd::Zero(ny, n3);
  s.g_ssv = MatrixXd::Zero(ny, n1);
  s.g_sss = VectorXd::Zero(ny);
  return s;
}

VectorXd first_order_regressors(const VectorXd& x, ShockPair s, MomentMode m) {
  const auto n = x.size();
  VectorXd v(n + 2);
  v.head(n) = x;
  v(n) = moments(s.eps_zeta, m).e1;
  v(n + 1) = s.eta_star;
  return v;
}

VectorXd second_order_regressors(const VectorXd& x, ShockPair s, MomentMode m) {
  const auto n = x.size();
  const EpsMoments e = moments(s.eps_zeta, m);
  const double eta = s.eta_star;
  VectorXd v(static_cast<Eigen::Index>(second_order_size(static_cast<std::size_t>(n))));
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) v(k++) = x(i) * x(j);
  for (Eigen::Index i = 0; i < n; ++i) v(k++) = x(i) * e.e1;
  for (Eigen::Index i = 0; i < n; ++i) v(k++) = x(i) * eta;
  v(k++) = e.e2;
  v(k++) = e.e1 * eta;
  v(k++) = eta * eta;
  return v;
}

VectorXd third_order_regressors(const VectorXd& x, ShockPair s, MomentMode m) {
  const auto n = x.size();
  const EpsMoments e = moments(s.eps_zeta, m);
  const double eta = s.eta_star;
  VectorXd v(static_cast<Eigen::Index>(third_order_size(static_cast<std::size_t>(n))));
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index l = 0; l < n; ++l) v(k++) = x(i) * x(j) * x(l);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) v(k++) = x(i) * x(j) * e.e1;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) v(k++) = x(i) * x(j) * eta;
  for (Eigen::Index i = 0; i < n; ++i) v(k++) = x(i) * e.e2;
  for (Eigen::Index i = 0; i < n; ++i) v(k++) = x(i) * e.e1 * eta;
  for (Eigen::Index i = 0; i < n; ++i) v(k++) = x(i) * eta * eta;
  v(k++) = e.e3;
  v(k++) = e.e2 * eta;
  v(k++) = e.e1 * eta * eta;
  v(k++) = eta * eta * eta;
  return v;
}

PrunedState PrunedState::zero(std::size_t n_x) {
  const auto n = static_cast<Eigen::Index>(n_x);
  return {VectorXd::Zero(n), VectorXd::Zero(n), VectorXd::Zero(n)};
}

PrunedStep pruned_step(const PrunedSolution& sol, const PrunedState& st, ShockPair shocks,
                       MomentMode mode) {
  const std::size_t nx = sol.n_states();
  const std::size_t ny = sol.n_controls();
  if (static_cast<std::size_t>(st.first.size()) != nx ||
      static_cast<std::size_t>(st.second.size()) != nx ||
      static_cast<std::size_t>(st.third.size()) != nx) {
    throw DimensionError("pruned state does not match the solution's state count");
  }
  const VectorXd v1 = first_order_regressors(st.first, shocks, mode);
  const VectorXd v2 = second_order_regressors(st.first, shocks, mode);
  const VectorXd v3 = third_order_regressors(st.first, shocks, mode);
  const VectorXd s_pad = pad_state(st.second);
  const VectorXd r_pad = pad_state(st.third);
  const double s2 = sol.sigma * sol.sigma;

  PrunedStep out;
  out.next.first = apply(sol.h_v, v1, nx);
  out.next.second = apply(sol.h_v, s_pad, nx) + 2.0 * apply(sol.H_vv, v2, nx);
  out.next.third = apply(sol.h_v, r_pad, nx) + apply(sol.H_vvv, v3, nx) +
                   0.5 * apply(sol.h_ssv, v1, nx) + (s2 / 6.0) * or_zero(sol.h_sss, nx);

  out.controls.first = apply(sol.g_v, v1, ny);
  out.controls.second = apply(sol.g_v, s_pad, ny) + 2.0 * apply(sol.G_vv, v2, ny);
  out.controls.third = apply(sol.g_v, r_pad, ny) + apply(sol.G_vvv, v3, ny) +
                       0.5 * apply(sol.g_ssv, v1, ny) + (s2 / 6.0) * or_zero(sol.g_sss, ny);
  return out;
}

PrunedState stochastic_steady_state(const PrunedSolution& sol, const IrfOptions& opt) {
  sol.validate();
  PrunedState s = PrunedState::zero(sol.n_states());
  for (std::size_t it = 0; it < opt.max_iterations; ++it) {
    PrunedState next = pruned_step(sol, s, {}, opt.moments).next;
    const double change = std::max({(next.first - s.first).cwiseAbs().maxCoeff(),
                                    (next.second - s.second).cwiseAbs().maxCoeff(),
                                    (next.third - s.third).cwiseAbs().maxCoeff()});
    s = std::move(next);
    if (!std::isfinite(change)) break;
    if (change <= opt.tolerance) return s;
  }
  throw NumericalError("stochastic steady state did not converge within " +
                       std::to_string(opt.max_iterations) + " iterations");
}

ShockName shock_name_from_string(const std::string& s) {
  if (s == "eta_star") return ShockName::eta_star;
  if (s == "eps_zeta") return ShockName::eps_zeta;
  throw ConfigError("unknown shock '" + s + "' (expected eta_star or eps_zeta)");
}

IrfPaths irf(const PrunedSolution& sol, ShockName shock, double size, std::size_t horizon,
             const IrfOptions& opt) {
  sol.validate();
  if (horizon < 1) throw ConfigError("horizon must be at least 1");
  const std::size_t nx = sol.n_states();
  const std::size_t ny = sol.n_controls();
  const PrunedState start = opt.start == IrfStart::zero ? PrunedState::zero(nx)
                                                        : stochastic_steady_state(sol, opt);
  IrfPaths out;
  out.variables = sol.state_labels;
  out.variables.insert(out.variables.end(), sol.control_labels.begin(), sol.control_labels.end());
  out.values = MatrixXd::Zero(static_cast<Eigen::Index>(horizon),
                              static_cast<Eigen::Index>(nx + ny));

  VectorXd ss(static_cast<Eigen::Index>(nx + ny));
  ss.setConstant(std::numeric_limits<double>::quiet_NaN());
  if (sol.state_steady_state.size() > 0) ss.head(static_cast<Eigen::Index>(nx)) = sol.state_steady_state;
  if (sol.control_steady_state.size() > 0) ss.tail(static_cast<Eigen::Index>(ny)) = sol.control_steady_state;

  PrunedState shocked = start;
  PrunedState base = start;
  for (std::size_t t = 0; t < horizon; ++t) {
    ShockPair s{};
    if (t == 0) (shock == ShockName::eta_star ? s.eta_star : s.eps_zeta) = size;
    const PrunedStep a = pruned_step(sol, shocked, s, opt.moments);
    const PrunedStep b = pruned_step(sol, base, {}, opt.moments);
    VectorXd va(static_cast<Eigen::Index>(nx + ny)), vb(static_cast<Eigen::Index>(nx + ny));
    va << a.next.total(), a.controls.total();
    vb << b.next.total(), b.controls.total();
    for (Eigen::Index j = 0; j < va.size(); ++j) {
      const double diff = va(j) - vb(j);
      out.values(static_cast<Eigen::Index>(t), j) =
          std::isnan(ss(j)) ? diff : 100.0 * diff / (ss(j) + vb(j));
    }
    shocked = a.next;
    base = b.next;
  }
  return out;
}

std::vector<DecompositionRow> decompose_impact(const PrunedSolution& sol, double eta_star) {
  sol.validate();
  const std::size_t nx = sol.n_states();
  if (sol.h_ssv.size() == 0 || sol.H_vvv.size() == 0) {
    throw DimensionError("decomposition needs the h_ssv and H_vvv blocks");
  }
  if (sol.n_controls() > 0 && (sol.g_ssv.size() == 0 || sol.G_vvv.size() == 0)) {
    throw DimensionError("decomposition needs the g_ssv and G_vvv blocks");
  }
  const auto eta = static_cast<Eigen::Index>(eta_column(nx));
  const auto een = static_cast<Eigen::Index>(eps_eps_eta_column(nx));
  std::vector<DecompositionRow> rows;
  auto emit = [&](const std::vector<std::string>& labels, const MatrixXd& ssv, const MatrixXd& cubic) {
    for (std::size_t i = 0; i < labels.size(); ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      const double direct = 0.5 * ssv(r, eta) * eta_star;
      const double interaction = cubic(r, een) * eta_star;
      rows.push_back({labels[i], direct, interaction, direct + interaction});
    }
  };
  emit(sol.state_labels, sol.h_ssv, sol.H_vvv);
  if (sol.n_controls() > 0) emit(sol.control_labels, sol.g_ssv, sol.G_vvv);
  return rows;
}

// ---------------------------------------------------------------------------
// Text format

namespace {

std::vector<std::string> tokens_of(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream ss(line);
  std::string tok;
  while (ss >> tok) out.push_back(tok);
  return out;
}

double to_double(const std::string& tok, std::size_t line) {
  if (tok == "nan" || tok == "NaN") return std::numeric_limits<double>::quiet_NaN();
  try {
    std::size_t pos = 0;
    const double v = std::stod(tok, &pos);
    if (pos != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw DataError("bad number '" + tok + "'", line);
  }
}

std::size_t to_size(const std::string& tok, std::size_t line) {
  try {
    std::size_t pos = 0;
    const unsigned long v = std::stoul(tok, &pos);
    if (pos != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw DataError("bad dimension '" + tok + "'", line);
  }
}

}  // namespace

PrunedSolution read_solution(std::istream& in) {
  PrunedSolution sol;
  std::map<std::string, MatrixXd*> matrices = {
      {"h_v", &sol.h_v},   {"H_vv", &sol.H_vv},   {"H_vvv", &sol.H_vvv}, {"h_ssv", &sol.h_ssv},
      {"g_v", &sol.g_v},   {"G_vv", &sol.G_vv},   {"G_vvv", &sol.G_vvv}, {"g_ssv", &sol.g_ssv}};
  std::map<std::string, VectorXd*> vectors = {{"h_sss", &sol.h_sss},
                                              {"g_sss", &sol.g_sss},
                                              {"state_steady_state", &sol.state_steady_state},
                                              {"control_steady_state", &sol.control_steady_state}};

  // Flatten into (token, line) pairs, dropping comments.
  std::vector<std::pair<std::string, std::size_t>> toks;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto c = line.find('#'); c != std::string::npos) line.erase(c);
    for (auto& t : tokens_of(line)) toks.emplace_back(std::move(t), lineno);
  }

  bool have_states = false;
  std::size_t i = 0;
  auto need = [&](std::size_t k) {
    if (i + k > toks.size()) throw DataError("unexpected end of solution file");
  };
  while (i < toks.size()) {
    const auto [key, ln] = toks[i];
    if (key == "states" || key == "controls") {
      need(2);
      const std::size_t n = to_size(toks[i + 1].first, ln);
      need(2 + n);
      auto& labels = key == "states" ? sol.state_labels : sol.control_labels;
      labels.clear();
      for (std::size_t k = 0; k < n; ++k) labels.push_back(toks[i + 2 + k].first);
      if (key == "states") have_states = true;
      i += 2 + n;
    } else if (key == "sigma") {
      need(2);
      sol.sigma = to_double(toks[i + 1].first, ln);
      i += 2;
    } else if (key == "matrix") {
      need(4);
      const std::string& name = toks[i + 1].first;
      auto it = matrices.find(name);
      if (it == matrices.end()) throw DataError("unknown matrix block '" + name + "'", ln);
      const std::size_t r = to_size(toks[i + 2].first, ln);
      const std::size_t c = to_size(toks[i + 3].first, ln);
      need(4 + r * c);
      MatrixXd m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
      for (std::size_t a = 0; a < r; ++a)
        for (std::size_t b = 0; b < c; ++b) {
          const auto& t = toks[i + 4 + a * c + b];
          m(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = to_double(t.first, t.second);
        }
      *it->second = std::move(m);
      i += 4 + r * c;
    } else if (key == "vector") {
      need(3);
      const std::string& name = toks[i + 1].first;
      auto it = vectors.find(name);
      if (it == vectors.end()) throw DataError("unknown vector block '" + name + "'", ln);
      const std::size_t n = to_size(toks[i + 2].first, ln);
      need(3 + n);
      VectorXd v(static_cast<Eigen::Index>(n));
      for (std::size_t a = 0; a < n; ++a) {
        const auto& t = toks[i + 3 + a];
        v(static_cast<Eigen::Index>(a)) = to_double(t.first, t.second);
      }
      *it->second = std::move(v);
      i += 3 + n;
    } else {
      throw DataError("unexpected token '" + key + "'", ln);
    }
  }
  if (!have_states) throw DataError("solution file has no 'states' line");
  sol.validate();
  return sol;
}

PrunedSolution read_solution(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open solution file " + path.string());
  return read_solution(in);
}

void write_solution(std::ostream& out, const PrunedSolution& sol) {
  sol.validate();
  auto labels = [&](const char* key, const std::vector<std::string>& l) {
    out << key << " " << l.size();
    for (const auto& s : l) out << " " << s;
    out << "\n";
  };
  out << "# pruned third-order solution\n";
  labels("states", sol.state_labels);
  labels("controls", sol.control_labels);
  out << "sigma " << csv::format_number(sol.sigma) << "\n";
  auto mat = [&](const char* name, const MatrixXd& m) {
    if (m.size() == 0) return;
    out << "matrix " << name << " " << m.rows() << " " << m.cols() << "\n";
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) out << (c ? " " : "") << csv::format_number(m(r, c));
      out << "\n";
    }
  };
  auto vec = [&](const char* name, const VectorXd& v) {
    if (v.size() == 0) return;
    out << "vector " << name << " " << v.size() << "\n";
    for (Eigen::Index k = 0; k < v.size(); ++k) out << (k ? " " : "") << csv::format_number(v(k));
    out << "\n";
  };
  mat("h_v", sol.h_v);
  mat("H_vv", sol.H_vv);
  mat("H_vvv", sol.H_vvv);
  mat("h_ssv", sol.h_ssv);
  vec("h_sss", sol.h_sss);
  mat("g_v", sol.g_v);
  mat("G_vv", sol.G_vv);
  mat("G_vvv", sol.G_vvv);
  mat("g_ssv", sol.g_ssv);
  vec("g_sss", sol.g_sss);
  vec("state_steady_state", sol.state_steady_state);
  vec("control_steady_state", sol.control_steady_state);
}

}  // namespace creditvol
