// SPDX-License-Identifier: Apache-2.0
//
// System parameters, second-order statistics and random scenario sampling.

#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "coexist/core.hpp"

namespace coexist {

/// Radar resolution cell: range bin in {0..N-L}, azimuth beam in {0..J-1}.
struct Cell {
  int range = 0;
  int beam = 0;
  auto operator<=>(const Cell&) const = default;
};

struct SystemParams {
  double bandwidth_hz = 1e6;
  double prt_s = 1e-4;
  int N = 100;  // range cells, N ~ W T
  int J = 3;    // azimuth beams
  int M = 2;    // comm transmit antennas
  int K = 2;    // comm receive antennas
  double pr_max = 25.0;   // W
  double pc_max = 0.01;   // W
  double pu = 2.39e-14;   // radar noise power, W
  double pv = 2.39e-14;   // comm noise power, W
  double eta = 0.85;
  double omega = 0.01;    // circuit power, W
  CVec code;              // length L, ||code||^2 == N after validate()

  [[nodiscard]] int L() const { return static_cast<int>(code.size()); }
  [[nodiscard]] int MN() const { return M * N; }
  [[nodiscard]] int KN() const { return K * N; }
};

/// Interference echo hitting the comm receiver in range bin `bin`, K x K.
struct AlphaTerm {
  int bin = 0;
  CMat cov;
};

/// Comm echo reaching radar beam `beam` from range bin `bin`, M x M over
/// the transmit-antenna pair (m, m').
struct BetaTerm {
  int bin = 0;
  int beam = 0;
  CMat cov;
};

struct StatisticsParams {
  std::map<Cell, double> sigma2_g;      // target echo variance per protected cell
  RMat sigma2_gamma;                    // N x J clutter variance
  std::vector<AlphaTerm> alpha;         // sparse; absent bins are zero
  std::vector<BetaTerm> beta;           // sparse; absent (bin, beam) are zero
  int nu0 = 0;
  std::vector<Cell> protected_cells;
  std::map<Cell, double> rho;           // minimum SDR, linear scale
  double sigma2_h = 3e-10;              // channel entry variance (for sampling)
};

struct ScenarioSample {
  CMat H;                                       // K x M
  std::vector<int> active_alpha_bins;           // sorted
  std::vector<std::vector<int>> active_beta_bins;  // per beam, sorted
  int nu0 = 0;
};

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

namespace detail {

template <typename T>
[[noreturn]] void invalid(const std::string& field, const T& value,
                          const std::string& rule) {
  std::ostringstream os;
  os << field << " = " << value << ": " << rule;
  throw ConfigError(os.str());
}

inline bool is_hpsd(const CMat& x, double rel_tol = 1e-10) {
  if (x.rows() != x.cols()) return false;
  if (x.size() == 0) return true;
  const double scale = std::max(1e-300, x.cwiseAbs().maxCoeff());
  if (hermitian_defect(x) > rel_tol * scale) return false;
  CMat h = x;
  hermitize(h);
  Eigen::SelfAdjointEigenSolver<CMat> es(h, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff() >= -rel_tol * scale;
}

}  // namespace detail

/// Checks the system invariants and rescales the code to ||q||^2 = N.
inline void validate(SystemParams& p) {
  if (p.N < 2) detail::invalid("N", p.N, "need at least two range cells");
  if (p.L() <= 0 || p.L() >= p.N)
    detail::invalid("L", p.L(), "L must satisfy 0<L<N");
  if (p.J < 1) detail::invalid("J", p.J, "must be >= 1");
  if (p.M < 1) detail::invalid("M", p.M, "must be >= 1");
  if (p.K < 1) detail::invalid("K", p.K, "must be >= 1");
  if (!(p.bandwidth_hz > 0)) detail::invalid("bandwidth_W", p.bandwidth_hz, "must be > 0");
  if (!(p.pr_max > 0)) detail::invalid("Pr_max", p.pr_max, "must be > 0");
  if (!(p.pc_max > 0)) detail::invalid("Pc_max", p.pc_max, "must be > 0");
  if (!(p.pu > 0)) detail::invalid("Pu", p.pu, "must be > 0");
  if (!(p.pv > 0)) detail::invalid("Pv", p.pv, "must be > 0");
  if (!(p.omega > 0)) detail::invalid("omega", p.omega, "must be > 0");
  if (!(p.eta > 0 && p.eta <= 1)) detail::invalid("eta", p.eta, "must satisfy 0<eta<=1");
  const double energy = p.code.squaredNorm();
  if (!(energy > 0)) detail::invalid("code_q", energy, "code has zero energy");
  if (std::abs(energy - p.N) > 1e-10 * p.N)
    p.code *= std::sqrt(static_cast<double>(p.N) / energy);
}

inline void validate(const SystemParams& sys, const StatisticsParams& s) {
  const int N = sys.N, J = sys.J, L = sys.L();
  if (s.protected_cells.empty())
    throw ConfigError("protected_cells: set must be nonempty");
  if (s.sigma2_gamma.rows() != N || s.sigma2_gamma.cols() != J)
    throw ConfigError("sigma2_gamma: expected an N x J table");
  if ((s.sigma2_gamma.array() < 0).any())
    detail::invalid("sigma2_gamma", s.sigma2_gamma.minCoeff(), "variances must be >= 0");
  if (s.nu0 < 0) detail::invalid("nu0", s.nu0, "must be >= 0");
  if (!(s.sigma2_h >= 0)) detail::invalid("sigma2_h", s.sigma2_h, "must be >= 0");
  for (const Cell& c : s.protected_cells) {
    if (c.range < 0 || c.range > N - L || c.beam < 0 || c.beam >= J) {
      std::ostringstream os;
      os << "protected_cells: cell (" << c.range << "," << c.beam
         << ") outside {0..N-L} x {0..J-1}";
      throw ConfigError(os.str());
    }
    auto g = s.sigma2_g.find(c);
    if (g == s.sigma2_g.end() || !(g->second >= 0))
      throw ConfigError("sigma2_g: missing or negative for a protected cell");
    auto r = s.rho.find(c);
    if (r == s.rho.end() || !(r->second > 0))
      throw ConfigError("rho: every protected cell needs a threshold > 0");
  }
  for (const auto& a : s.alpha) {
    if (a.bin < 0 || a.bin >= N) detail::invalid("sigma2_alpha.bin", a.bin, "out of range");
    if (a.cov.rows() != sys.K || !detail::is_hpsd(a.cov))
      detail::invalid("sigma2_alpha.bin", a.bin, "covariance must be K x K Hermitian PSD");
  }
  for (const auto& b : s.beta) {
    if (b.bin < 0 || b.bin >= N) detail::invalid("sigma2_beta.bin", b.bin, "out of range");
    if (b.beam < 0 || b.beam >= J) detail::invalid("sigma2_beta.beam", b.beam, "out of range");
    if (b.cov.rows() != sys.M || !detail::is_hpsd(b.cov))
      detail::invalid("sigma2_beta.bin", b.bin, "covariance must be M x M Hermitian PSD");
  }
}

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

namespace detail {

/// Uniform random subset of {0..n-1} of size k, sorted.
template <typename Rng>
std::vector<int> random_subset(int n, int k, Rng& rng) {
  std::vector<int> all(static_cast<std::size_t>(n));
  std::iota(all.begin(), all.end(), 0);
  for (int i = 0; i < k; ++i) {
    std::uniform_int_distribution<int> pick(i, n - 1);
    std::swap(all[static_cast<std::size_t>(i)], all[static_cast<std::size_t>(pick(rng))]);
  }
  all.resize(static_cast<std::size_t>(k));
  std::sort(all.begin(), all.end());
  return all;
}

}  // namespace detail

/// Number of active scatterer bins for density delta: floor(delta N).
[[nodiscard]] inline int active_bin_count(double delta, int N) {
  return static_cast<int>(std::floor(delta * N + 1e-9));
}

/// Random channel, scatterer placement and mutual delay for one Monte Carlo
/// run. A pure function of its arguments.
[[nodiscard]] inline ScenarioSample sample_scenario(const SystemParams& sys,
                                                    double sigma2_h, double delta,
                                                    std::uint64_t seed) {
  if (!(delta >= 0 && delta <= 1))
    detail::invalid("delta", delta, "density must lie in [0,1]");
  if (!(sigma2_h >= 0)) detail::invalid("sigma2_h", sigma2_h, "must be >= 0");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, std::sqrt(sigma2_h / 2.0));

  ScenarioSample out;
  out.H.resize(sys.K, sys.M);
  for (int m = 0; m < sys.M; ++m)
    for (int k = 0; k < sys.K; ++k) out.H(k, m) = cd(normal(rng), normal(rng));

  const int count = active_bin_count(delta, sys.N);
  out.active_alpha_bins = detail::random_subset(sys.N, count, rng);
  out.active_beta_bins.resize(static_cast<std::size_t>(sys.J));
  for (auto& bins : out.active_beta_bins) bins = detail::random_subset(sys.N, count, rng);
  out.nu0 = std::uniform_int_distribution<int>(0, sys.N - 1)(rng);
  return out;
}

/// Writes the sampled interference pattern into `stats`: sigma2 I_K on every
/// active alpha bin and sigma2 I_M (independent rays) on every active beta bin.
inline void apply_sample(const SystemParams& sys, const ScenarioSample& sample,
                         double sigma2, StatisticsParams& stats) {
  if (!(sigma2 >= 0)) detail::invalid("sigma2", sigma2, "must be >= 0");
  stats.alpha.clear();
  stats.beta.clear();
  stats.nu0 = sample.nu0;
  if (sigma2 == 0) return;
  for (int i : sample.active_alpha_bins)
    stats.alpha.push_back({i, sigma2 * CMat::Identity(sys.K, sys.K)});
  for (int j = 0; j < sys.J; ++j)
    for (int i : sample.active_beta_bins[static_cast<std::size_t>(j)])
      stats.beta.push_back({i, j, sigma2 * CMat::Identity(sys.M, sys.M)});
}

/// Uniform random subset of the admissible cells {0..N-L} x {0..J-1}.
template <typename Rng>
[[nodiscard]] std::vector<Cell> sample_protected_cells(const SystemParams& sys, int count,
                                                       Rng& rng) {
  const int ranges = sys.N - sys.L() + 1;
  const int total = ranges * sys.J;
  if (count < 1 || count > total)
    detail::invalid("cells", count, "protected-cell count out of range");
  std::vector<Cell> cells;
  for (int idx : detail::random_subset(total, count, rng))
    cells.push_back({idx % ranges, idx / ranges});
  std::sort(cells.begin(), cells.end());
  return cells;
}

/// Uniform threshold and target variance over the given protected cells.
inline void set_protected_cells(StatisticsParams& stats, const std::vector<Cell>& cells,
                                double sigma2_g, double rho_linear) {
  stats.protected_cells = cells;
  stats.sigma2_g.clear();
  stats.rho.clear();
  for (const Cell& c : cells) {
    stats.sigma2_g[c] = sigma2_g;
    stats.rho[c] = rho_linear;
  }
}

inline void set_rho(StatisticsParams& stats, double rho_linear) {
  for (const Cell& c : stats.protected_cells) stats.rho[c] = rho_linear;
}

}  // namespace coexist
