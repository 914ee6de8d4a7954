// SPDX-License-Identifier: Apache-2.0
//
// Joint design by block coordinate ascent over (filters, radar power,
// codebook covariance), plus the feasibility check and starting point.

#pragma once

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "coexist/comm_opt.hpp"
#include "coexist/radar_opt.hpp"

namespace coexist {

// ---------------------------------------------------------------------------
// Feasibility
// ---------------------------------------------------------------------------

struct FeasibilityReport {
  RVec ceiling;          // largest achievable SDR per protected cell, linear
  double overall = 0.0;  // min over cells, linear
  bool feasible = false; // every rho_k <= ceiling_k
};

/// Largest SDR each protected cell can reach: radar at Pr_max with max-SDR
/// filters and the comm transmitter silent.
[[nodiscard]] inline FeasibilityReport check_feasibility(const Scenario& sc) {
  const auto& sys = sc.system();
  const CMat zero = CMat::Zero(sys.MN(), sys.MN());
  const auto llt = disturbance_factors(sc, zero, sys.pr_max);
  FeasibilityReport r;
  r.ceiling.resize(sc.cell_count());
  r.feasible = true;
  for (int k = 0; k < sc.cell_count(); ++k) {
    const Cell c = sc.cells()[static_cast<std::size_t>(k)];
    const auto q = sc.code(c.range);
    const CVec x = llt[static_cast<std::size_t>(c.beam)].solve(q);
    r.ceiling(k) = sys.pr_max * sc.sigma2_g(k) * std::real(q.dot(x));
    if (sc.rho(k) > r.ceiling(k)) r.feasible = false;
  }
  r.overall = r.ceiling.minCoeff();
  return r;
}

// ---------------------------------------------------------------------------
// Starting point
// ---------------------------------------------------------------------------

struct DesignPoint {
  RadarDesign radar;
  CMat C;
};

/// Feasible start: filters for a silent transmitter at Pr_max, then the
/// largest isotropic codebook (Pc_max 10^-t per symbol, t = 0..12) whose
/// required radar power fits under Pr_max.
[[nodiscard]] inline DesignPoint initial_point(const Scenario& sc) {
  const auto& sys = sc.system();
  const int mn = sys.MN();
  DesignPoint p;
  p.radar.filters = update_filters(sc, CMat::Zero(mn, mn), sys.pr_max);
  for (int t = 0; t <= 12; ++t) {
    const double pc = sys.pc_max * std::pow(10.0, -t);
    const CMat C = CMat::Identity(mn, mn) * (pc / sys.M);
    try {
      p.radar.pr = update_radar_power(sc, C, p.radar.filters);
      p.C = C;
      return p;
    } catch (const InfeasiblePowerError&) {
    }
  }
  p.C = CMat::Zero(mn, mn);
  p.radar.pr = update_radar_power(sc, p.C, p.radar.filters);  // throws when infeasible
  return p;
}

// ---------------------------------------------------------------------------
// Block coordinate ascent
// ---------------------------------------------------------------------------

enum class Objective { energy_efficiency, rate };
enum class SolveStatus { converged, max_iterations, infeasible };

[[nodiscard]] inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::converged: return "converged";
    case SolveStatus::max_iterations: return "max_iterations";
    case SolveStatus::infeasible: return "infeasible";
  }
  return "unknown";
}

struct SolverOptions {
  double outer_tolerance = 1e-5;
  int max_outer_iterations = 100;
  Objective objective = Objective::energy_efficiency;
  DinkelbachOptions dinkelbach;
};

struct OuterStep {
  double ee = 0.0;
  double rate = 0.0;
  double pr = 0.0;
  double trace_c = 0.0;
  double min_margin_db = 0.0;
  int inner_iterations = 0;
};

struct DesignSolution {
  CMat C;
  RadarDesign radar;
  double ee = 0.0;
  double rate = 0.0;
  double comm_power = 0.0;   // tr(C) / N
  RVec sdr;                  // per protected cell, linear
  double min_margin_db = 0.0;
  RVec mu;                   // codebook multipliers of the last outer iteration
  std::vector<OuterStep> trace;  // entry 0 is the starting point
  int outer_iterations = 0;
  SolveStatus status = SolveStatus::converged;
};

namespace detail {

inline void finalize(const Scenario& sc, DesignSolution& s, double rate_bps) {
  const auto& sys = sc.system();
  s.rate = rate_bps;
  s.comm_power = s.C.trace().real() / sys.N;
  s.ee = energy_efficiency(s.C, rate_bps, sys);
  s.sdr = sdr_values(sc, s.C, s.radar.pr, s.radar.filters);
  s.min_margin_db = min_sdr_margin_db(sc, s.sdr);
}

}  // namespace detail

/// Cycles filters -> radar power -> codebook until the relative objective
/// gain drops below the outer tolerance.
[[nodiscard]] inline DesignSolution block_coordinate_ascent(const Scenario& sc,
                                                            const SolverOptions& opt = {}) {
  const auto& sys = sc.system();
  DesignSolution sol;
  if (!check_feasibility(sc).feasible) {
    sol.status = SolveStatus::infeasible;
    return sol;
  }
  DesignPoint start;
  try {
    start = initial_point(sc);
  } catch (const InfeasibleError&) {
    sol.status = SolveStatus::infeasible;
    return sol;
  }
  sol.C = std::move(start.C);
  sol.radar = std::move(start.radar);

  const bool ee_mode = opt.objective == Objective::energy_efficiency;
  auto objective = [&](double ee, double r) { return ee_mode ? ee : r; };

  EquivalentChannel ch = equivalent_channel(sc, sol.radar.pr);
  double cur_rate = rate(sol.C, ch, sys);
  double cur_ee = energy_efficiency(sol.C, cur_rate, sys);
  {
    const RVec s0 = sdr_values(sc, sol.C, sol.radar.pr, sol.radar.filters);
    sol.trace.push_back({cur_ee, cur_rate, sol.radar.pr, sol.C.trace().real(),
                         min_sdr_margin_db(sc, s0), 0});
  }
  std::optional<RVec> mu;
  sol.status = SolveStatus::max_iterations;
  for (int it = 1; it <= opt.max_outer_iterations; ++it) {
    const double prev = objective(cur_ee, cur_rate);
    try {
      sol.radar.filters = update_filters(sc, sol.C, sol.radar.pr);
      sol.radar.pr = update_radar_power(sc, sol.C, sol.radar.filters);
      ch = equivalent_channel(sc, sol.radar.pr);
      const SdrConstraintData data = sdr_constraint_data(sc, sol.radar.filters, sol.radar.pr);
      CodebookResult cb;
      if (ee_mode) {
        cb = dinkelbach(ch, data, sol.C, sys, opt.dinkelbach, mu);
      } else {
        cb = maximize_rate(ch, data, sys, opt.dinkelbach.dual, mu);
        const double keep = rate(sol.C, ch, sys);
        if (cb.rate < keep) {
          cb.C = sol.C;
          cb.rate = keep;
          cb.trace_c = sol.C.trace().real();
        }
      }
      mu = cb.mu;
      sol.mu = cb.mu;
      sol.C = std::move(cb.C);
      cur_rate = cb.rate;
      cur_ee = energy_efficiency(cb.trace_c, cb.rate, sys);
      int inner = 0;
      for (const auto& st : cb.trace) inner += st.dual_iterations;
      const RVec sd = sdr_values(sc, sol.C, sol.radar.pr, sol.radar.filters);
      sol.trace.push_back({cur_ee, cur_rate, sol.radar.pr, cb.trace_c, min_sdr_margin_db(sc, sd),
                           inner});
    } catch (const InfeasibleError&) {
      sol.status = SolveStatus::infeasible;
      sol.outer_iterations = it;
      return sol;
    }
    sol.outer_iterations = it;
    const double now = objective(cur_ee, cur_rate);
    if (now - prev <= opt.outer_tolerance * std::abs(prev)) {
      sol.status = SolveStatus::converged;
      break;
    }
  }
  detail::finalize(sc, sol, cur_rate);
  return sol;
}

}  // namespace coexist
