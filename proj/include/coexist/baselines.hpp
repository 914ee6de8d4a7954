// SPDX-License-Identifier: Apache-2.0
//
// Reference designs: the non-interfering bound, the disjoint design evaluated
// under interference, and the rate-maximizing joint design.

#pragma once

#include <algorithm>
#include <vector>

#include "coexist/solver.hpp"

namespace coexist {

enum class BaselineKind { non_interfering, disjoint, rate_opt };

struct BaselineResult {
  BaselineKind kind = BaselineKind::non_interfering;
  CMat C;
  RadarDesign radar;
  double ee = 0.0;
  double rate = 0.0;
  double comm_power = 0.0;
  RVec sdr;
  double rho_star = 0.0;       // disjoint: smallest SDR over protected cells, linear
  bool feasible = true;        // disjoint: every cell meets its target
  RVec zeta;                   // nonzero singular values of H, descending
  int rank = 0;
  RVec powers;                 // per-mode power per symbol
  double waterlevel = 0.0;
  bool power_cap_binding = true;  // rate_opt: the power multiplier is positive
  int outer_iterations = 0;
  SolveStatus status = SolveStatus::converged;
};

/// Per-mode powers (level - 1/g)_+ with the level chosen so that the powers
/// sum to `budget`; returns the level.
[[nodiscard]] inline double waterfill_level(const RVec& gains, double budget) {
  std::vector<double> inv(static_cast<std::size_t>(gains.size()));
  for (Eigen::Index i = 0; i < gains.size(); ++i) inv[static_cast<std::size_t>(i)] = 1.0 / gains(i);
  std::sort(inv.begin(), inv.end());
  double level = 0.0, acc = 0.0;
  for (std::size_t k = 0; k < inv.size(); ++k) {
    acc += inv[k];
    level = (budget + acc) / static_cast<double>(k + 1);
    if (k + 1 == inv.size() || level <= inv[k + 1]) break;
  }
  return level;
}

/// Energy-efficiency-optimal powers on parallel channels with gains `gains`
/// (per symbol), total cap `pc_max`, by Dinkelbach with a waterfilling inner step.
struct ParallelEeSolution {
  RVec powers;
  double level = 0.0;
  double lambda = 0.0;   // bit/J
  std::vector<double> lambda_trace;
};

[[nodiscard]] inline ParallelEeSolution parallel_ee_waterfilling(const RVec& gains, const SystemParams& sys,
                                                                 double tolerance = 1e-12,
                                                                 int max_iterations = 100) {
  auto powers_at = [&](double level) {
    RVec p(gains.size());
    for (Eigen::Index i = 0; i < gains.size(); ++i) p(i) = std::max(0.0, level - 1.0 / gains(i));
    return p;
  };
  auto f_of = [&](const RVec& p) {
    double r = 0.0;
    for (Eigen::Index i = 0; i < gains.size(); ++i) r += std::log1p(gains(i) * p(i));
    return sys.bandwidth_hz * kLog2e * r;
  };
  auto h_of = [&](const RVec& p) { return p.sum() / sys.eta + sys.omega; };

  ParallelEeSolution out;
  const double cap_level = waterfill_level(gains, sys.pc_max);
  if (gains.size() == 0) {
    out.powers = RVec();
    return out;
  }
  double lambda = 0.0;
  RVec p = powers_at(cap_level);
  double level = cap_level;
  for (int it = 0; it < max_iterations; ++it) {
    // Subproblem optimum: level eta W log2e / lambda, capped at the budget.
    level = lambda > 0 ? std::min(cap_level, sys.eta * sys.bandwidth_hz * kLog2e / lambda) : cap_level;
    p = powers_at(level);
    const double f = f_of(p), h = h_of(p);
    out.lambda_trace.push_back(lambda);
    const double value = f - lambda * h;
    if (it > 0 && value <= tolerance * lambda * h) break;
    lambda = f / h;
  }
  out.powers = p;
  out.level = level;
  out.lambda = f_of(p) / h_of(p);
  return out;
}

/// Radar at Pr_max with clutter-whitened matched filters; codebook by EE
/// waterfilling on the singular modes of H, identical across symbols.
[[nodiscard]] inline BaselineResult non_interfering_design(const Scenario& sc) {
  const auto& sys = sc.system();
  const Scenario quiet = sc.without_interference();
  BaselineResult r;
  r.kind = BaselineKind::non_interfering;
  r.radar.pr = sys.pr_max;
  r.radar.filters = update_filters(quiet, CMat::Zero(sys.MN(), sys.MN()), sys.pr_max);

  Eigen::JacobiSVD<CMat> svd(sc.channel(), Eigen::ComputeFullV);
  const RVec sv = svd.singularValues();
  const double top = sv.size() ? sv.maxCoeff() : 0.0;
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > 1e-12 * top && sv(i) > 0) keep.push_back(i);
  r.rank = static_cast<int>(keep.size());
  r.zeta.resize(r.rank);
  RVec gains(r.rank);
  for (int i = 0; i < r.rank; ++i) {
    r.zeta(i) = sv(keep[static_cast<std::size_t>(i)]);
    gains(i) = r.zeta(i) * r.zeta(i) / sys.pv;
  }

  CMat S = CMat::Zero(sys.M, sys.M);
  if (r.rank > 0) {
    const ParallelEeSolution pe = parallel_ee_waterfilling(gains, sys);
    r.powers = pe.powers;
    r.waterlevel = pe.level;
    for (int i = 0; i < r.rank; ++i) {
      const auto v = svd.matrixV().col(keep[static_cast<std::size_t>(i)]);
      S.noalias() += pe.powers(i) * v * v.adjoint();
    }
  }
  hermitize(S);
  r.C = kron(S, CMat::Identity(sys.N, sys.N));
  const EquivalentChannel ch = equivalent_channel(quiet, sys.pr_max);
  r.rate = rate(r.C, ch, sys);
  r.comm_power = r.C.trace().real() / sys.N;
  r.ee = energy_efficiency(r.C, r.rate, sys);
  r.sdr = sdr_values(quiet, r.C, r.radar.pr, r.radar.filters);
  r.rho_star = r.sdr.minCoeff();
  return r;
}

/// The non-interfering design applied unchanged in the interfered scenario.
[[nodiscard]] inline BaselineResult disjoint_evaluate(const Scenario& sc, const BaselineResult& ni) {
  const auto& sys = sc.system();
  BaselineResult r = ni;
  r.kind = BaselineKind::disjoint;
  const EquivalentChannel ch = equivalent_channel(sc, r.radar.pr);
  r.rate = rate(r.C, ch, sys);
  r.ee = energy_efficiency(r.C, r.rate, sys);
  r.sdr = sdr_values(sc, r.C, r.radar.pr, r.radar.filters);
  r.rho_star = r.sdr.minCoeff();
  r.feasible = true;
  for (int k = 0; k < sc.cell_count(); ++k)
    if (r.sdr(k) < sc.rho(k)) r.feasible = false;
  return r;
}

[[nodiscard]] inline BaselineResult disjoint_evaluate(const Scenario& sc) {
  return disjoint_evaluate(sc, non_interfering_design(sc));
}

/// Joint design maximizing the rate. The power cap binds unless the SDR
/// constraint matrices jointly cover every direction, which the result flags.
[[nodiscard]] inline BaselineResult rate_opt_design(const Scenario& sc, SolverOptions opt = {}) {
  opt.objective = Objective::rate;
  const DesignSolution s = block_coordinate_ascent(sc, opt);
  BaselineResult r;
  r.kind = BaselineKind::rate_opt;
  r.status = s.status;
  r.outer_iterations = s.outer_iterations;
  if (s.status == SolveStatus::infeasible) return r;
  r.power_cap_binding = s.mu.size() > 0 && s.mu(s.mu.size() - 1) > 0;
  r.C = s.C;
  r.radar = s.radar;
  r.ee = s.ee;
  r.rate = s.rate;
  r.comm_power = s.comm_power;
  r.sdr = s.sdr;
  r.rho_star = s.sdr.minCoeff();
  return r;
}

}  // namespace coexist
