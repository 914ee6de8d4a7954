// SPDX-License-Identifier: Apache-2.0
//
// JSON configuration: system parameters, statistics, sweep grid, Monte Carlo
// settings and solver options.

#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "coexist/solver.hpp"

namespace coexist {

using json = nlohmann::json;

enum class Mode { ee, rate, disjoint, isolated };

[[nodiscard]] inline const char* to_string(Mode m) {
  switch (m) {
    case Mode::ee: return "ee";
    case Mode::rate: return "rate";
    case Mode::disjoint: return "disjoint";
    case Mode::isolated: return "isolated";
  }
  return "unknown";
}

[[nodiscard]] inline Mode parse_mode(const std::string& s) {
  if (s == "ee") return Mode::ee;
  if (s == "rate") return Mode::rate;
  if (s == "disjoint") return Mode::disjoint;
  if (s == "isolated") return Mode::isolated;
  throw ConfigError("mode = " + s + ": expected ee|rate|disjoint|isolated");
}

struct SweepSpec {
  std::vector<double> rho_db{5.0};
  std::vector<double> delta{0.2};
  std::vector<double> sigma2{1.2e-13};
  std::vector<int> cells{30};
  std::vector<Mode> modes{Mode::ee, Mode::disjoint, Mode::isolated};
  int runs = 1;
  std::uint64_t base_seed = 1;
};

/// Everything fixed across Monte Carlo runs, plus optional explicit overrides
/// for quantities that are otherwise sampled per run.
struct Config {
  SystemParams system;
  RMat sigma2_gamma;                 // N x J
  double sigma2_g = 4.8e-16;         // default target variance
  std::map<Cell, double> sigma2_g_cells;
  double sigma2_h = 3e-10;
  double rho_db = 5.0;
  std::optional<std::vector<Cell>> protected_cells;
  std::optional<CMat> channel;
  std::optional<int> nu0;
  std::optional<std::vector<AlphaTerm>> alpha;
  std::optional<std::vector<BetaTerm>> beta;
  SweepSpec sweep;
  SolverOptions solver;
  std::string canonical;             // compact dump of the parsed document

  /// True when the interference pattern is given rather than sampled.
  [[nodiscard]] bool explicit_interference() const { return alpha.has_value() || beta.has_value(); }
};

namespace detail {

[[noreturn]] inline void bad(const std::string& field, const std::string& why) {
  throw ConfigError(field + ": " + why);
}

template <typename T>
T get_or(const json& j, const char* key, T fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    bad(where + "." + key, e.what());
  }
}

inline cd parse_complex(const json& v, const std::string& where) {
  if (v.is_number()) return {v.get<double>(), 0.0};
  if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number())
    return {v[0].get<double>(), v[1].get<double>()};
  bad(where, "expected a number or [re, im]");
}

inline CMat parse_complex_matrix(const json& v, const std::string& where) {
  if (!v.is_array() || v.empty() || !v[0].is_array()) bad(where, "expected a nested array");
  const auto rows = static_cast<Eigen::Index>(v.size());
  const auto cols = static_cast<Eigen::Index>(v[0].size());
  CMat out(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const json& row = v[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) bad(where, "ragged matrix");
    for (Eigen::Index c = 0; c < cols; ++c)
      out(r, c) = parse_complex(row[static_cast<std::size_t>(c)], where);
  }
  return out;
}

inline Cell parse_cell(const json& v, const std::string& where) {
  if (!v.is_array() || v.size() != 2) bad(where, "cell must be [range, beam]");
  return {v[0].get<int>(), v[1].get<int>()};
}

template <typename T>
std::vector<T> scalar_or_list(const json& j, const char* key, std::vector<T> fallback,
                              const std::string& where) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  try {
    if (v.is_array()) return v.get<std::vector<T>>();
    return {v.get<T>()};
  } catch (const json::exception& e) {
    bad(where + "." + key, e.what());
  }
}

inline CMat interference_cov(const json& t, int dim, const std::string& where) {
  if (t.contains("cov")) return parse_complex_matrix(t.at("cov"), where + ".cov");
  if (t.contains("value")) return t.at("value").get<double>() * CMat::Identity(dim, dim);
  bad(where, "needs `value` or `cov`");
}

inline SystemParams parse_system(const json& j) {
  SystemParams s;
  const std::string w = "system";
  s.bandwidth_hz = get_or(j, "bandwidth_W", s.bandwidth_hz, w);
  s.prt_s = get_or(j, "prt_T", s.prt_s, w);
  s.N = get_or(j, "N", s.N, w);
  s.J = get_or(j, "J", s.J, w);
  s.M = get_or(j, "M", s.M, w);
  s.K = get_or(j, "K", s.K, w);
  s.pr_max = get_or(j, "Pr_max", s.pr_max, w);
  s.pc_max = get_or(j, "Pc_max", s.pc_max, w);
  s.pu = get_or(j, "Pu", s.pu, w);
  s.pv = get_or(j, "Pv", s.pv, w);
  s.eta = get_or(j, "eta", s.eta, w);
  s.omega = get_or(j, "omega", s.omega, w);
  if (j.contains("code_q")) {
    const json& q = j.at("code_q");
    if (!q.is_array()) bad("system.code_q", "expected an array");
    s.code.resize(static_cast<Eigen::Index>(q.size()));
    for (std::size_t i = 0; i < q.size(); ++i)
      s.code(static_cast<Eigen::Index>(i)) = parse_complex(q[i], "system.code_q");
  } else {
    s.code.resize(5);
    s.code << 1, 1, 1, -1, 1;  // Barker-5
  }
  validate(s);
  return s;
}

inline DualOptions parse_dual(const json& j, DualOptions d) {
  const std::string w = "solver.dual";
  const std::string method = get_or<std::string>(j, "method", "quasi_newton", w);
  if (method == "quasi_newton") d.method = DualMethod::quasi_newton;
  else if (method == "projected_gradient") d.method = DualMethod::projected_gradient;
  else bad(w + ".method", "expected quasi_newton|projected_gradient, got " + method);
  const std::string sched = get_or<std::string>(j, "schedule", "diminishing", w);
  if (sched == "diminishing") d.schedule = StepSchedule::diminishing;
  else if (sched == "armijo") d.schedule = StepSchedule::armijo;
  else bad(w + ".schedule", "expected diminishing|armijo, got " + sched);
  d.tolerance = get_or(j, "tolerance", d.tolerance, w);
  d.max_iterations = get_or(j, "max_iterations", d.max_iterations, w);
  d.step0 = get_or(j, "step0", d.step0, w);
  if (!(d.tolerance > 0)) bad(w + ".tolerance", "must be > 0");
  if (d.max_iterations < 1) bad(w + ".max_iterations", "must be >= 1");
  if (!(d.step0 > 0)) bad(w + ".step0", "must be > 0");
  return d;
}

inline SolverOptions parse_solver(const json& j) {
  SolverOptions o;
  const std::string w = "solver";
  o.outer_tolerance = get_or(j, "outer_tolerance", o.outer_tolerance, w);
  o.max_outer_iterations = get_or(j, "max_outer_iterations", o.max_outer_iterations, w);
  if (!(o.outer_tolerance > 0)) bad("solver.outer_tolerance", "must be > 0");
  if (o.max_outer_iterations < 1) bad("solver.max_outer_iterations", "must be >= 1");
  if (j.contains("dinkelbach")) {
    const json& d = j.at("dinkelbach");
    o.dinkelbach.tolerance = get_or(d, "tolerance", o.dinkelbach.tolerance, "solver.dinkelbach");
    o.dinkelbach.max_iterations =
        get_or(d, "max_iterations", o.dinkelbach.max_iterations, "solver.dinkelbach");
    if (!(o.dinkelbach.tolerance > 0)) bad("solver.dinkelbach.tolerance", "must be > 0");
    if (o.dinkelbach.max_iterations < 1) bad("solver.dinkelbach.max_iterations", "must be >= 1");
  }
  if (j.contains("dual")) o.dinkelbach.dual = parse_dual(j.at("dual"), o.dinkelbach.dual);
  return o;
}

}  // namespace detail

/// Parses and validates a configuration document. Unknown keys are ignored.
[[nodiscard]] inline Config parse_config(const json& doc) {
  if (!doc.is_object()) throw ConfigError("configuration must be a JSON object");
  Config c;
  c.canonical = doc.dump();
  c.system = detail::parse_system(doc.value("system", json::object()));
  const int N = c.system.N, J = c.system.J;

  const json st = doc.value("statistics", json::object());
  const std::string w = "statistics";
  c.sigma2_g = detail::get_or(st, "sigma2_g", c.sigma2_g, w);
  if (!(c.sigma2_g >= 0)) detail::bad("statistics.sigma2_g", "must be >= 0");
  if (st.contains("sigma2_g_cells"))
    for (const auto& e : st.at("sigma2_g_cells"))
      c.sigma2_g_cells[detail::parse_cell(e.at("cell"), "statistics.sigma2_g_cells")] =
          e.at("value").get<double>();
  c.sigma2_gamma = RMat::Constant(N, J, 4.8e-17);
  if (st.contains("sigma2_gamma")) {
    const json& g = st.at("sigma2_gamma");
    if (g.is_number()) {
      c.sigma2_gamma.setConstant(g.get<double>());
    } else {
      if (!g.is_array() || static_cast<int>(g.size()) != N)
        detail::bad("statistics.sigma2_gamma", "expected a number or an N x J table");
      for (int i = 0; i < N; ++i) {
        const auto row = g[static_cast<std::size_t>(i)].get<std::vector<double>>();
        if (static_cast<int>(row.size()) != J)
          detail::bad("statistics.sigma2_gamma", "row " + std::to_string(i) + " must have J entries");
        for (int j = 0; j < J; ++j) c.sigma2_gamma(i, j) = row[static_cast<std::size_t>(j)];
      }
    }
  }
  c.sigma2_h = detail::get_or(st, "sigma2_h", c.sigma2_h, w);
  c.rho_db = detail::get_or(st, "rho_db", c.rho_db, w);
  if (st.contains("protected_cells")) {
    std::vector<Cell> cells;
    for (const auto& e : st.at("protected_cells"))
      cells.push_back(detail::parse_cell(e, "statistics.protected_cells"));
    if (cells.empty()) detail::bad("statistics.protected_cells", "set must be nonempty");
    c.protected_cells = std::move(cells);
  }
  if (st.contains("channel")) c.channel = detail::parse_complex_matrix(st.at("channel"), "statistics.channel");
  if (st.contains("nu0")) c.nu0 = st.at("nu0").get<int>();
  if (st.contains("sigma2_alpha")) {
    std::vector<AlphaTerm> terms;
    for (const auto& t : st.at("sigma2_alpha"))
      terms.push_back({t.at("bin").get<int>(),
                       detail::interference_cov(t, c.system.K, "statistics.sigma2_alpha")});
    c.alpha = std::move(terms);
  }
  if (st.contains("sigma2_beta")) {
    std::vector<BetaTerm> terms;
    for (const auto& t : st.at("sigma2_beta"))
      terms.push_back({t.at("bin").get<int>(), t.at("beam").get<int>(),
                       detail::interference_cov(t, c.system.M, "statistics.sigma2_beta")});
    c.beta = std::move(terms);
  }

  const json sw = doc.value("sweep", json::object());
  SweepSpec& s = c.sweep;
  s.rho_db = detail::scalar_or_list<double>(sw, "rho_db", {c.rho_db}, "sweep");
  s.delta = detail::scalar_or_list<double>(sw, "delta", s.delta, "sweep");
  s.sigma2 = detail::scalar_or_list<double>(sw, "sigma2", s.sigma2, "sweep");
  s.cells = detail::scalar_or_list<int>(sw, "cells", s.cells, "sweep");
  if (sw.contains("modes")) {
    s.modes.clear();
    for (const auto& m : detail::scalar_or_list<std::string>(sw, "modes", {}, "sweep"))
      s.modes.push_back(parse_mode(m));
  }
  if (s.rho_db.empty() || s.delta.empty() || s.sigma2.empty() || s.cells.empty() || s.modes.empty())
    detail::bad("sweep", "every list must be nonempty");
  for (double d : s.delta)
    if (!(d >= 0 && d <= 1)) detail::bad("sweep.delta", "density must lie in [0,1]");
  for (double v : s.sigma2)
    if (!(v >= 0)) detail::bad("sweep.sigma2", "must be >= 0");
  for (int k : s.cells)
    if (k < 1 || k > (N - c.system.L() + 1) * J) detail::bad("sweep.cells", "count out of range");

  const json mc = doc.value("montecarlo", json::object());
  s.runs = detail::get_or(mc, "runs", s.runs, "montecarlo");
  s.base_seed = detail::get_or<std::uint64_t>(mc, "base_seed", s.base_seed, "montecarlo");
  if (s.runs < 1) detail::bad("montecarlo.runs", "must be >= 1");

  c.solver = detail::parse_solver(doc.value("solver", json::object()));
  return c;
}

[[nodiscard]] inline Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open configuration file");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return parse_config(doc);
}

/// FNV-1a over the canonical document; keys are sorted by the parser, so the
/// hash ignores formatting and key order.
[[nodiscard]] inline std::uint64_t config_hash(const Config& c) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : c.canonical) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

[[nodiscard]] inline std::string hex16(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << v;
  return os.str();
}

// ---------------------------------------------------------------------------
// Scenario assembly
// ---------------------------------------------------------------------------

/// One point of the sweep grid apart from rho.
struct SweepPoint {
  double delta = 0.2;
  double sigma2 = 1.2e-13;
  int cells = 30;
};

/// Scenario of Monte Carlo run `seed` at `point` with uniform threshold
/// rho_db. Sampled quantities are replaced by explicit configuration values
/// where present.
[[nodiscard]] inline Scenario build_scenario(const Config& cfg, const SweepPoint& point,
                                             double rho_db, std::uint64_t seed) {
  const SystemParams& sys = cfg.system;
  const ScenarioSample sample = sample_scenario(sys, cfg.sigma2_h, point.delta, seed);
  StatisticsParams st;
  st.sigma2_gamma = cfg.sigma2_gamma;
  st.sigma2_h = cfg.sigma2_h;
  apply_sample(sys, sample, point.sigma2, st);
  if (cfg.alpha) st.alpha = *cfg.alpha;
  if (cfg.beta) st.beta = *cfg.beta;
  if (cfg.nu0) st.nu0 = *cfg.nu0;

  std::vector<Cell> cells;
  if (cfg.protected_cells) {
    cells = *cfg.protected_cells;
  } else {
    // Separate stream so the cell draw does not shift the channel draw.
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
    cells = sample_protected_cells(sys, point.cells, rng);
  }
  set_protected_cells(st, cells, cfg.sigma2_g, db_to_linear(rho_db));
  for (const auto& [cell, v] : cfg.sigma2_g_cells)
    if (st.sigma2_g.count(cell)) st.sigma2_g[cell] = v;
  return Scenario(sys, std::move(st), cfg.channel ? *cfg.channel : sample.H);
}

/// First grid point and base seed: the instance `solve` and `validate-sdr` use.
[[nodiscard]] inline Scenario default_scenario(const Config& cfg, std::optional<double> rho_db = {}) {
  const SweepPoint p{cfg.sweep.delta.front(), cfg.sweep.sigma2.front(), cfg.sweep.cells.front()};
  return build_scenario(cfg, p, rho_db.value_or(cfg.sweep.rho_db.front()), cfg.sweep.base_seed);
}

}  // namespace coexist
