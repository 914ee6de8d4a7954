// SPDX-License-Identifier: Apache-2.0
//
// Monte Carlo harness: sweeps over (delta, sigma2, |X|, rho), per-run JSON
// records, CSV output and the empirical SDR check.

#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "coexist/baselines.hpp"
#include "coexist/config.hpp"

namespace coexist {

// ---------------------------------------------------------------------------
// Logging
// ---------------------------------------------------------------------------

enum class LogLevel { error = 0, warn = 1, info = 2, debug = 3 };

/// Verbosity from COEXIST_LOG (error|warn|info|debug), default warn.
[[nodiscard]] inline LogLevel log_level() {
  static const LogLevel level = [] {
    const char* v = std::getenv("COEXIST_LOG");
    if (!v) return LogLevel::warn;
    const std::string s(v);
    if (s == "error") return LogLevel::error;
    if (s == "info") return LogLevel::info;
    if (s == "debug") return LogLevel::debug;
    return LogLevel::warn;
  }();
  return level;
}

inline void log(LogLevel lvl, const std::string& msg) {
  static std::mutex mu;
  if (static_cast<int>(lvl) > static_cast<int>(log_level())) return;
  static const char* names[] = {"error", "warn", "info", "debug"};
  std::lock_guard<std::mutex> lock(mu);
  std::cerr << "[coexist " << names[static_cast<int>(lvl)] << "] " << msg << '\n';
}

// ---------------------------------------------------------------------------
// Run records
// ---------------------------------------------------------------------------

struct RunRecord {
  std::string sweep_id;
  double rho_db = 0.0;
  double delta = 0.0;
  double sigma2 = 0.0;
  int cells = 0;
  Mode mode = Mode::ee;
  std::uint64_t seed = 0;
  double ee = 0.0;
  double rate = 0.0;
  double comm_power = 0.0;
  double radar_power = 0.0;
  double min_sdr_margin_db = 0.0;
  int outer_iters = 0;
  std::string status;   // converged | max_iterations | infeasible | sdr_violated | error
  double wall_ms = 0.0;
  std::vector<OuterStep> trace;
};

inline constexpr const char* kRunsCsvHeader =
    "sweep_id,rho_db,delta,sigma2,cells,mode,seed,ee_bits_per_joule,rate_bps,comm_power_w,"
    "radar_power_w,min_sdr_margin_db,outer_iters,status,wall_ms";

/// The record carries a usable design.
[[nodiscard]] inline bool has_design(const RunRecord& r) {
  return r.status != "infeasible" && r.status != "error";
}
/// The design meets every SDR target.
[[nodiscard]] inline bool is_feasible(const RunRecord& r) {
  return has_design(r) && r.status != "sdr_violated";
}

inline json to_json(const RunRecord& r, bool with_trace) {
  json j{{"sweep_id", r.sweep_id}, {"rho_db", r.rho_db}, {"delta", r.delta},
         {"sigma2", r.sigma2}, {"cells", r.cells}, {"mode", to_string(r.mode)},
         {"seed", r.seed}, {"ee_bits_per_joule", r.ee}, {"rate_bps", r.rate},
         {"comm_power_w", r.comm_power}, {"radar_power_w", r.radar_power},
         {"min_sdr_margin_db", r.min_sdr_margin_db}, {"outer_iters", r.outer_iters},
         {"status", r.status}, {"wall_ms", r.wall_ms}};
  if (with_trace) {
    json t = json::array();
    for (const auto& s : r.trace)
      t.push_back({{"ee", s.ee}, {"rate", s.rate}, {"pr", s.pr}, {"trace_c", s.trace_c},
                   {"min_margin_db", s.min_margin_db}, {"inner_iterations", s.inner_iterations}});
    j["trace"] = std::move(t);
  }
  return j;
}

inline RunRecord record_from_json(const json& j) {
  RunRecord r;
  r.sweep_id = j.at("sweep_id").get<std::string>();
  r.rho_db = j.at("rho_db").get<double>();
  r.delta = j.at("delta").get<double>();
  r.sigma2 = j.at("sigma2").get<double>();
  r.cells = j.at("cells").get<int>();
  r.mode = parse_mode(j.at("mode").get<std::string>());
  r.seed = j.at("seed").get<std::uint64_t>();
  r.ee = j.at("ee_bits_per_joule").get<double>();
  r.rate = j.at("rate_bps").get<double>();
  r.comm_power = j.at("comm_power_w").get<double>();
  r.radar_power = j.at("radar_power_w").get<double>();
  r.min_sdr_margin_db = j.at("min_sdr_margin_db").get<double>();
  r.outer_iters = j.at("outer_iters").get<int>();
  r.status = j.at("status").get<std::string>();
  r.wall_ms = j.at("wall_ms").get<double>();
  if (j.contains("trace"))
    for (const auto& s : j.at("trace"))
      r.trace.push_back({s.at("ee").get<double>(), s.at("rate").get<double>(), s.at("pr").get<double>(),
                         s.at("trace_c").get<double>(), s.at("min_margin_db").get<double>(),
                         s.at("inner_iterations").get<int>()});
  return r;
}

namespace detail {

inline std::string fmt(double v) {
  if (!std::isfinite(v)) return v > 0 ? "inf" : (v < 0 ? "-inf" : "nan");
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

inline void fill_from_solution(RunRecord& r, const DesignSolution& s) {
  r.status = to_string(s.status);
  r.outer_iters = s.outer_iterations;
  r.trace = s.trace;
  if (s.status == SolveStatus::infeasible) return;
  r.ee = s.ee;
  r.rate = s.rate;
  r.comm_power = s.comm_power;
  r.radar_power = s.radar.pr;
  r.min_sdr_margin_db = s.min_margin_db;
}

inline void fill_from_baseline(RunRecord& r, const Scenario& sc, const BaselineResult& b) {
  r.ee = b.ee;
  r.rate = b.rate;
  r.comm_power = b.comm_power;
  r.radar_power = b.radar.pr;
  r.min_sdr_margin_db = b.sdr.size() ? min_sdr_margin_db(sc, b.sdr) : 0.0;
  r.outer_iters = b.outer_iterations;
}

}  // namespace detail

inline std::string to_csv_row(const RunRecord& r) {
  using detail::fmt;
  std::ostringstream os;
  os << r.sweep_id << ',' << fmt(r.rho_db) << ',' << fmt(r.delta) << ',' << fmt(r.sigma2) << ','
     << r.cells << ',' << to_string(r.mode) << ',' << r.seed << ',' << fmt(r.ee) << ','
     << fmt(r.rate) << ',' << fmt(r.comm_power) << ',' << fmt(r.radar_power) << ','
     << fmt(r.min_sdr_margin_db) << ',' << r.outer_iters << ',' << r.status << ','
     << fmt(std::round(r.wall_ms * 1000.0) / 1000.0);
  return os.str();
}

// ---------------------------------------------------------------------------
// One Monte Carlo run
// ---------------------------------------------------------------------------

/// Runs every requested mode at every rho of the grid on the scenario of
/// `seed` at `point`. The isolated and disjoint designs do not depend on rho
/// and are computed once.
[[nodiscard]] inline std::vector<RunRecord> run_point(const Config& cfg, const SweepPoint& point,
                                                      std::uint64_t seed, const std::string& sweep_id) {
  using clock = std::chrono::steady_clock;
  std::vector<RunRecord> out;
  const auto& grid = cfg.sweep.rho_db;
  const Scenario base = build_scenario(cfg, point, grid.front(), seed);

  std::optional<BaselineResult> ni, dj;
  double ni_ms = 0.0, dj_ms = 0.0;
  auto baselines = [&] {
    if (ni) return;
    auto t0 = clock::now();
    ni = non_interfering_design(base);
    auto t1 = clock::now();
    dj = disjoint_evaluate(base, *ni);
    auto t2 = clock::now();
    ni_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    dj_ms = std::chrono::duration<double, std::milli>(t2 - t1).count() + ni_ms;
  };

  for (double rho_db : grid) {
    const Scenario sc = base.with_rho(db_to_linear(rho_db));
    for (Mode mode : cfg.sweep.modes) {
      RunRecord r;
      r.sweep_id = sweep_id;
      r.rho_db = rho_db;
      r.delta = point.delta;
      r.sigma2 = point.sigma2;
      r.cells = sc.cell_count();
      r.mode = mode;
      r.seed = seed;
      const auto t0 = clock::now();
      try {
        switch (mode) {
          case Mode::ee: {
            SolverOptions o = cfg.solver;
            o.objective = Objective::energy_efficiency;
            detail::fill_from_solution(r, block_coordinate_ascent(sc, o));
            break;
          }
          case Mode::rate: {
            const BaselineResult b = rate_opt_design(sc, cfg.solver);
            r.status = to_string(b.status);
            r.outer_iters = b.outer_iterations;
            if (b.status != SolveStatus::infeasible) detail::fill_from_baseline(r, sc, b);
            break;
          }
          case Mode::isolated: {
            baselines();
            const Scenario quiet = sc.without_interference();
            detail::fill_from_baseline(r, quiet, *ni);
            r.status = "converged";
            break;
          }
          case Mode::disjoint: {
            baselines();
            detail::fill_from_baseline(r, sc, *dj);
            r.status = r.min_sdr_margin_db >= 0 ? "converged" : "sdr_violated";
            break;
          }
        }
      } catch (const CoexistError& e) {
        r.status = "error";
        log(LogLevel::warn, "seed " + std::to_string(seed) + " mode " + to_string(mode) + ": " + e.what());
      }
      r.wall_ms = std::chrono::duration<double, std::milli>(clock::now() - t0).count();
      if (mode == Mode::isolated) r.wall_ms = ni_ms;
      if (mode == Mode::disjoint) r.wall_ms = dj_ms;
      out.push_back(std::move(r));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Aggregation
// ---------------------------------------------------------------------------

struct AggregateRow {
  std::string sweep_id;
  double rho_db = 0, delta = 0, sigma2 = 0;
  int cells = 0;
  Mode mode = Mode::ee;
  int runs = 0;
  int included = 0;          // records with a design
  double feasible_fraction = 0;
  double ee_mean = 0, ee_std = 0, rate_mean = 0, rate_std = 0;
  double comm_power_mean = 0, radar_power_mean = 0, outer_iters_mean = 0;
};

inline constexpr const char* kAggregateCsvHeader =
    "sweep_id,rho_db,delta,sigma2,cells,mode,runs,included,feasible_fraction,ee_mean,ee_std,"
    "rate_mean,rate_std,comm_power_mean,radar_power_mean,outer_iters_mean";

/// Groups by (sweep point, rho, mode) in key order. Records without a design
/// are excluded from the means and counted in `runs - included`.
[[nodiscard]] inline std::vector<AggregateRow> aggregate(const std::vector<RunRecord>& records) {
  using Key = std::tuple<double, double, int, double, int>;
  std::map<Key, std::vector<const RunRecord*>> groups;
  for (const auto& r : records)
    groups[{r.delta, r.sigma2, r.cells, r.rho_db, static_cast<int>(r.mode)}].push_back(&r);
  std::vector<AggregateRow> out;
  for (const auto& [key, rs] : groups) {
    AggregateRow a;
    a.sweep_id = rs.front()->sweep_id;
    a.delta = std::get<0>(key);
    a.sigma2 = std::get<1>(key);
    a.cells = std::get<2>(key);
    a.rho_db = std::get<3>(key);
    a.mode = static_cast<Mode>(std::get<4>(key));
    a.runs = static_cast<int>(rs.size());
    int feasible = 0;
    double s_ee = 0, s_ee2 = 0, s_r = 0, s_r2 = 0, s_pc = 0, s_pr = 0, s_it = 0;
    for (const RunRecord* r : rs) {
      if (is_feasible(*r)) ++feasible;
      if (!has_design(*r)) continue;
      ++a.included;
      s_ee += r->ee;
      s_ee2 += r->ee * r->ee;
      s_r += r->rate;
      s_r2 += r->rate * r->rate;
      s_pc += r->comm_power;
      s_pr += r->radar_power;
      s_it += r->outer_iters;
    }
    a.feasible_fraction = static_cast<double>(feasible) / a.runs;
    if (a.included > 0) {
      const double n = a.included;
      a.ee_mean = s_ee / n;
      a.rate_mean = s_r / n;
      a.ee_std = n > 1 ? std::sqrt(std::max(0.0, (s_ee2 - n * a.ee_mean * a.ee_mean) / (n - 1))) : 0.0;
      a.rate_std = n > 1 ? std::sqrt(std::max(0.0, (s_r2 - n * a.rate_mean * a.rate_mean) / (n - 1))) : 0.0;
      a.comm_power_mean = s_pc / n;
      a.radar_power_mean = s_pr / n;
      a.outer_iters_mean = s_it / n;
    }
    out.push_back(a);
  }
  return out;
}

inline std::string to_csv_row(const AggregateRow& a) {
  using detail::fmt;
  std::ostringstream os;
  os << a.sweep_id << ',' << fmt(a.rho_db) << ',' << fmt(a.delta) << ',' << fmt(a.sigma2) << ','
     << a.cells << ',' << to_string(a.mode) << ',' << a.runs << ',' << a.included << ','
     << fmt(a.feasible_fraction) << ',' << fmt(a.ee_mean) << ',' << fmt(a.ee_std) << ','
     << fmt(a.rate_mean) << ',' << fmt(a.rate_std) << ',' << fmt(a.comm_power_mean) << ','
     << fmt(a.radar_power_mean) << ',' << fmt(a.outer_iters_mean);
  return os.str();
}

// ---------------------------------------------------------------------------
// Sweep
// ---------------------------------------------------------------------------

struct SweepOptions {
  std::filesystem::path out_dir;   // empty: keep everything in memory
  int jobs = 1;
  bool trace = false;              // store the outer-iteration trace in run JSON
};

struct SweepResult {
  std::vector<RunRecord> records;  // sorted by point, seed, rho, mode
  std::vector<AggregateRow> aggregates;
  int reused = 0;                  // runs loaded from existing JSON
};

/// Applies `fn(i)` for i in [0, n) on `jobs` threads.
template <typename Fn>
void parallel_for(int n, int jobs, Fn&& fn) {
  jobs = std::max(1, std::min(jobs, n));
  if (jobs == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  for (int t = 0; t < jobs; ++t)
    pool.emplace_back([&] {
      for (int i = next++; i < n; i = next++) fn(i);
    });
  for (auto& th : pool) th.join();
}

/// Every (delta, sigma2, |X|) point times `runs` seeds. Seeds are
/// base_seed + run index, so the scenario of a run is shared across the rho
/// grid and across modes. Run JSON files whose config hash matches are reused.
[[nodiscard]] inline SweepResult run_sweep(const Config& cfg, const SweepOptions& opt = {}) {
  const std::string sweep_id = hex16(config_hash(cfg));
  std::vector<SweepPoint> points;
  for (double d : cfg.sweep.delta)
    for (double s2 : cfg.sweep.sigma2)
      for (int k : cfg.sweep.cells) points.push_back({d, s2, k});
  const int runs = cfg.sweep.runs;
  const int units = static_cast<int>(points.size()) * runs;

  namespace fs = std::filesystem;
  const bool persist = !opt.out_dir.empty();
  if (persist) fs::create_directories(opt.out_dir / "runs");
  auto run_path = [&](int p, int r) {
    std::ostringstream name;
    name << "p" << p << "_seed" << cfg.sweep.base_seed + static_cast<std::uint64_t>(r) << ".json";
    return opt.out_dir / "runs" / name.str();
  };

  std::vector<std::vector<RunRecord>> slots(static_cast<std::size_t>(units));
  std::atomic<int> reused{0}, done{0};
  parallel_for(units, opt.jobs, [&](int u) {
    const int p = u / runs, r = u % runs;
    const std::uint64_t seed = cfg.sweep.base_seed + static_cast<std::uint64_t>(r);
    auto& slot = slots[static_cast<std::size_t>(u)];
    if (persist && fs::exists(run_path(p, r))) {
      try {
        std::ifstream in(run_path(p, r));
        const json j = json::parse(in);
        if (j.at("sweep_id").get<std::string>() == sweep_id) {
          for (const auto& rec : j.at("records")) slot.push_back(record_from_json(rec));
          ++reused;
          return;
        }
      } catch (const std::exception& e) {
        log(LogLevel::warn, run_path(p, r).string() + ": unreadable, recomputing (" + e.what() + ")");
      }
    }
    slot = run_point(cfg, points[static_cast<std::size_t>(p)], seed, sweep_id);
    if (persist) {
      json j{{"sweep_id", sweep_id}, {"seed", seed}, {"records", json::array()}};
      for (const auto& rec : slot) j["records"].push_back(to_json(rec, opt.trace));
      std::ofstream(run_path(p, r)) << j.dump(1) << '\n';
    }
    const int d = ++done;
    log(LogLevel::info, "run " + std::to_string(d) + " (point " + std::to_string(p) + ", seed " +
                            std::to_string(seed) + ") done");
  });

  SweepResult res;
  res.reused = reused;
  for (auto& s : slots)
    for (auto& rec : s) res.records.push_back(std::move(rec));
  res.aggregates = aggregate(res.records);

  int excluded = 0;
  for (const auto& rec : res.records)
    if (!has_design(rec)) ++excluded;
  if (excluded > 0)
    log(LogLevel::warn, std::to_string(excluded) + " records without a design excluded from aggregates");

  if (persist) {
    std::ofstream runs_csv(opt.out_dir / "runs.csv");
    runs_csv << kRunsCsvHeader << '\n';
    for (const auto& rec : res.records) runs_csv << to_csv_row(rec) << '\n';
    std::ofstream agg(opt.out_dir / "aggregate.csv");
    agg << kAggregateCsvHeader << '\n';
    for (const auto& a : res.aggregates) agg << to_csv_row(a) << '\n';
  }
  return res;
}

// ---------------------------------------------------------------------------
// Empirical SDR check
// ---------------------------------------------------------------------------

struct SdrCheckRow {
  Cell cell;
  double analytic = 0.0;   // linear
  double empirical = 0.0;  // linear
  double deviation = 0.0;  // |empirical / analytic - 1|
};

struct SdrCheckReport {
  std::vector<SdrCheckRow> rows;
  double max_deviation = 0.0;
  long long draws = 0;
};

/// Compares the analytic SDR of design (C, Pr, filters) at every protected
/// cell with the ratio of empirical filtered signal and disturbance powers
/// over `draws` independent snapshots.
[[nodiscard]] inline SdrCheckReport empirical_sdr(const Scenario& sc, const CMat& C, double pr,
                                                  const std::vector<CVec>& filters, long long draws,
                                                  std::uint64_t seed) {
  SdrCheckReport rep;
  rep.draws = draws;
  if (draws <= 0) return rep;
  const RVec analytic = sdr_values(sc, C, pr, filters);
  const RadarSnapshotSampler sampler(sc, C, pr);
  std::mt19937_64 rng(seed);
  const int n = sc.cell_count();
  std::vector<double> sig(static_cast<std::size_t>(n), 0.0), dist(static_cast<std::size_t>(n), 0.0);
  for (long long t = 0; t < draws; ++t) {
    const std::vector<CVec> d = sampler.draw_disturbance(rng);
    for (int k = 0; k < n; ++k) {
      const CVec& w = filters[static_cast<std::size_t>(k)];
      const int beam = sc.cells()[static_cast<std::size_t>(k)].beam;
      sig[static_cast<std::size_t>(k)] += std::norm(w.dot(sampler.draw_signal(k, rng)));
      dist[static_cast<std::size_t>(k)] += std::norm(w.dot(d[static_cast<std::size_t>(beam)]));
    }
  }
  for (int k = 0; k < n; ++k) {
    SdrCheckRow row;
    row.cell = sc.cells()[static_cast<std::size_t>(k)];
    row.analytic = analytic(k);
    row.empirical = sig[static_cast<std::size_t>(k)] / dist[static_cast<std::size_t>(k)];
    row.deviation = std::abs(row.empirical / row.analytic - 1.0);
    rep.max_deviation = std::max(rep.max_deviation, row.deviation);
    rep.rows.push_back(row);
  }
  return rep;
}

/// Solves the default instance of `cfg` for maximum EE and checks its SDR
/// empirically. With draws == 0 nothing is solved and the report is empty.
[[nodiscard]] inline SdrCheckReport validate_sdr(const Config& cfg, long long draws,
                                                 std::optional<double> rho_db = {}) {
  if (draws <= 0) return {};
  const Scenario sc = default_scenario(cfg, rho_db);
  const DesignSolution s = block_coordinate_ascent(sc, cfg.solver);
  if (s.status == SolveStatus::infeasible)
    throw InfeasibleError("validate-sdr: no feasible design for this configuration");
  return empirical_sdr(sc, s.C, s.radar.pr, s.radar.filters, draws, cfg.sweep.base_seed + 7919);
}

}  // namespace coexist
