// SPDX-License-Identifier: Apache-2.0
//
// coexist: command-line front end.
//   coexist solve <config> [--mode ee|rate|disjoint|isolated] [--rho <dB>]
//   coexist sweep <config> [--out <dir>] [--jobs N] [--trace]
//   coexist validate-sdr <config> --draws N [--rho <dB>]
//   coexist feasibility <config> [--rho <dB>]
// Exit codes: 0 success, 2 infeasible, 3 convergence failure, 4 config error.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "coexist/coexist.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kInfeasible = 2;
constexpr int kNoConvergence = 3;
constexpr int kConfigError = 4;

void print_design(const coexist::Scenario& sc, double ee, double rate, double pc, double pr,
                  const coexist::RVec& sdr) {
  std::printf("ee_bits_per_joule  %.6e\n", ee);
  std::printf("rate_bps           %.6e\n", rate);
  std::printf("comm_power_w       %.6e\n", pc);
  std::printf("radar_power_w      %.6e\n", pr);
  if (sdr.size()) std::printf("min_sdr_margin_db  %.4f\n", coexist::min_sdr_margin_db(sc, sdr));
}

int cmd_solve(const coexist::Config& cfg, const std::string& mode_name, std::optional<double> rho) {
  using namespace coexist;
  const Mode mode = parse_mode(mode_name);
  const Scenario sc = default_scenario(cfg, rho);
  std::printf("mode               %s\n", to_string(mode));
  std::printf("rho_db             %.4f\n", rho.value_or(cfg.sweep.rho_db.front()));
  switch (mode) {
    case Mode::ee: {
      const DesignSolution s = block_coordinate_ascent(sc, cfg.solver);
      std::printf("status             %s\n", to_string(s.status));
      std::printf("outer_iters        %d\n", s.outer_iterations);
      if (s.status == SolveStatus::infeasible) return kInfeasible;
      print_design(sc, s.ee, s.rate, s.comm_power, s.radar.pr, s.sdr);
      return s.status == SolveStatus::converged ? kOk : kNoConvergence;
    }
    case Mode::rate: {
      const BaselineResult b = rate_opt_design(sc, cfg.solver);
      std::printf("status             %s\n", to_string(b.status));
      std::printf("outer_iters        %d\n", b.outer_iterations);
      if (b.status == SolveStatus::infeasible) return kInfeasible;
      print_design(sc, b.ee, b.rate, b.comm_power, b.radar.pr, b.sdr);
      std::printf("power_cap_binding  %s\n", b.power_cap_binding ? "yes" : "no");
      return b.status == SolveStatus::converged ? kOk : kNoConvergence;
    }
    case Mode::isolated: {
      const BaselineResult b = non_interfering_design(sc);
      print_design(sc, b.ee, b.rate, b.comm_power, b.radar.pr, b.sdr);
      return kOk;
    }
    case Mode::disjoint: {
      const BaselineResult b = disjoint_evaluate(sc);
      print_design(sc, b.ee, b.rate, b.comm_power, b.radar.pr, b.sdr);
      std::printf("min_sdr_db         %.4f\n", linear_to_db(b.rho_star));
      std::printf("sdr_targets_met    %s\n", b.feasible ? "yes" : "no");
      return b.feasible ? kOk : kInfeasible;
    }
  }
  return kOk;
}

int cmd_sweep(const coexist::Config& cfg, const std::string& out, int jobs, bool trace) {
  using namespace coexist;
  SweepOptions opt;
  opt.out_dir = out;
  opt.jobs = jobs > 0 ? jobs : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  opt.trace = trace;
  const SweepResult res = run_sweep(cfg, opt);
  std::printf("records %zu, reused runs %d, output %s\n", res.records.size(), res.reused, out.c_str());
  std::cout << kAggregateCsvHeader << '\n';
  for (const auto& a : res.aggregates) std::cout << to_csv_row(a) << '\n';
  return kOk;
}

int cmd_validate(const coexist::Config& cfg, long long draws, std::optional<double> rho) {
  using namespace coexist;
  const SdrCheckReport rep = validate_sdr(cfg, draws, rho);
  std::printf("draws %lld, cells %zu\n", rep.draws, rep.rows.size());
  if (!rep.rows.empty()) {
    std::printf("range beam analytic_db empirical_db deviation\n");
    for (const auto& r : rep.rows)
      std::printf("%5d %4d %11.4f %12.4f %9.5f\n", r.cell.range, r.cell.beam, linear_to_db(r.analytic),
                  linear_to_db(r.empirical), r.deviation);
    std::printf("max_deviation %.5f\n", rep.max_deviation);
  }
  return kOk;
}

int cmd_feasibility(const coexist::Config& cfg, std::optional<double> rho) {
  using namespace coexist;
  const Scenario sc = default_scenario(cfg, rho);
  const FeasibilityReport f = check_feasibility(sc);
  const FeasibilityReport clear = check_feasibility(sc.without_clutter());
  std::printf("max_feasible_rho_db %.4f\n", linear_to_db(f.overall));
  std::printf("max_feasible_rho_db_without_clutter %.4f\n", linear_to_db(clear.overall));
  std::printf("target_rho_db %.4f -> %s\n", rho.value_or(cfg.sweep.rho_db.front()),
              f.feasible ? "feasible" : "infeasible");
  return f.feasible ? kOk : kInfeasible;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Joint MIMO codebook and radar power/filter design for spectrum sharing"};
  app.require_subcommand(1);

  std::string config_path, mode = "ee", out_dir = "results";
  std::optional<double> rho;
  int jobs = 0;
  long long draws = 0;
  bool trace = false;

  auto* solve = app.add_subcommand("solve", "Design one instance");
  solve->add_option("config", config_path, "Configuration file")->required();
  solve->add_option("--mode", mode, "ee|rate|disjoint|isolated");
  solve->add_option("--rho", rho, "SDR threshold in dB");

  auto* sweep = app.add_subcommand("sweep", "Monte Carlo sweep");
  sweep->add_option("config", config_path, "Configuration file")->required();
  sweep->add_option("--out", out_dir, "Output directory");
  sweep->add_option("--jobs", jobs, "Worker threads (default: all cores)");
  sweep->add_flag("--trace", trace, "Store outer-iteration traces in run JSON");

  auto* validate = app.add_subcommand("validate-sdr", "Compare analytic and empirical SDR");
  validate->add_option("config", config_path, "Configuration file")->required();
  validate->add_option("--draws", draws, "Snapshots per cell")->required();
  validate->add_option("--rho", rho, "SDR threshold in dB");

  auto* feas = app.add_subcommand("feasibility", "Largest achievable SDR");
  feas->add_option("config", config_path, "Configuration file")->required();
  feas->add_option("--rho", rho, "SDR threshold in dB");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kConfigError;
  }

  try {
    const coexist::Config cfg = coexist::load_config(config_path);
    if (*solve) return cmd_solve(cfg, mode, rho);
    if (*sweep) return cmd_sweep(cfg, out_dir, jobs, trace);
    if (*validate) return cmd_validate(cfg, draws, rho);
    if (*feas) return cmd_feasibility(cfg, rho);
  } catch (const coexist::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const coexist::DimensionError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const coexist::InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << '\n';
    return kInfeasible;
  } catch (const coexist::ConvergenceError& e) {
    std::cerr << "convergence failure: " << e.what() << '\n';
    return kNoConvergence;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return kOk;
}
