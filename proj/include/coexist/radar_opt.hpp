// SPDX-License-Identifier: Apache-2.0
//
// Radar block updates: max-SDR receive filters for a fixed codebook and the
// smallest transmit power meeting every SDR target.

#pragma once

#include <limits>
#include <vector>

#include "coexist/signal_model.hpp"

namespace coexist {

struct RadarDesign {
  std::vector<CVec> filters;  // aligned with Scenario::cells(), unit norm
  double pr = 0.0;
};

/// Cholesky factor of the disturbance covariance for every beam that holds a
/// protected cell.
[[nodiscard]] inline std::vector<Eigen::LLT<CMat>> disturbance_factors(const Scenario& sc,
                                                                       const CMat& C, double pr) {
  const int J = sc.system().J;
  std::vector<bool> used(static_cast<std::size_t>(J), false);
  for (const Cell& c : sc.cells()) used[static_cast<std::size_t>(c.beam)] = true;
  std::vector<Eigen::LLT<CMat>> out(static_cast<std::size_t>(J));
  for (int j = 0; j < J; ++j) {
    if (!used[static_cast<std::size_t>(j)]) continue;
    out[static_cast<std::size_t>(j)].compute(radar_disturbance(sc, C, pr, j));
    if (out[static_cast<std::size_t>(j)].info() != Eigen::Success)
      throw NumericalError("disturbance covariance is not positive definite");
  }
  return out;
}

/// w = D_j^{-1} q_n normalized to unit norm, one filter per protected cell.
[[nodiscard]] inline std::vector<CVec> update_filters(const Scenario& sc, const CMat& C, double pr) {
  if (!(pr >= 0)) throw DimensionError("update_filters: Pr must be >= 0");
  const auto llt = disturbance_factors(sc, C, pr);
  std::vector<CVec> filters;
  filters.reserve(sc.cells().size());
  for (const Cell& c : sc.cells()) {
    CVec w = llt[static_cast<std::size_t>(c.beam)].solve(sc.code(c.range));
    w.normalize();
    filters.push_back(std::move(w));
  }
  return filters;
}

/// SDR of every protected cell for the design (C, Pr, filters).
[[nodiscard]] inline RVec sdr_values(const Scenario& sc, const CMat& C, double pr,
                                     const std::vector<CVec>& filters) {
  const int J = sc.system().J;
  std::vector<CMat> dist(static_cast<std::size_t>(J));
  RVec out(sc.cell_count());
  for (int k = 0; k < sc.cell_count(); ++k) {
    const Cell c = sc.cells()[static_cast<std::size_t>(k)];
    auto& d = dist[static_cast<std::size_t>(c.beam)];
    if (d.size() == 0) d = radar_disturbance(sc, C, pr, c.beam);
    const CVec& w = filters[static_cast<std::size_t>(k)];
    const double num = pr * sc.sigma2_g(k) * std::norm(w.dot(sc.code(c.range)));
    out(k) = num / std::real(w.dot(d * w));
  }
  return out;
}

/// Smallest SDR margin in dB (SDR / rho) over the protected cells.
[[nodiscard]] inline double min_sdr_margin_db(const Scenario& sc, const RVec& sdr) {
  double worst = std::numeric_limits<double>::infinity();
  for (int k = 0; k < sc.cell_count(); ++k) worst = std::min(worst, sdr(k) / sc.rho(k));
  return linear_to_db(worst);
}

/// Minimum radar power meeting every SDR target:
/// max_k rho (w^H D_beta w + Pu ||w||^2) / (sigma2_g |w^H q|^2 - rho w^H R_gamma w).
/// Throws InfeasiblePowerError when some denominator is <= 0 or the result
/// exceeds Pr_max.
[[nodiscard]] inline double update_radar_power(const Scenario& sc, const CMat& C,
                                               const std::vector<CVec>& filters) {
  const auto& sys = sc.system();
  if (static_cast<int>(filters.size()) != sc.cell_count())
    throw DimensionError("update_radar_power: one filter per protected cell expected");
  std::vector<CMat> data(static_cast<std::size_t>(sys.J));
  double pr = 0.0;
  for (int k = 0; k < sc.cell_count(); ++k) {
    const Cell c = sc.cells()[static_cast<std::size_t>(k)];
    auto& db = data[static_cast<std::size_t>(c.beam)];
    if (db.size() == 0) db = data_interference(sc, C, c.beam);
    const CVec& w = filters[static_cast<std::size_t>(k)];
    const double rho = sc.rho(k);
    const double num = rho * (std::real(w.dot(db * w)) + sys.pu * w.squaredNorm());
    const double den = sc.sigma2_g(k) * std::norm(w.dot(sc.code(c.range))) -
                       rho * std::real(w.dot(sc.clutter_covariance(c.beam) * w));
    if (!(den > 0))
      throw InfeasiblePowerError("SDR target unreachable at any radar power for cell (" +
                                 std::to_string(c.range) + "," + std::to_string(c.beam) + ")");
    pr = std::max(pr, num / den);
  }
  if (pr > sys.pr_max)
    throw InfeasiblePowerError("required radar power " + std::to_string(pr) +
                               " W exceeds Pr_max");
  return pr;
}

}  // namespace coexist
