// SPDX-License-Identifier: Apache-2.0
//
// Deterministic matrix objects of the coexistence model and the figures of
// merit built on them: shifted codes, covariance segments, the equivalent
// channel F, the SDR constraint matrices E_l, rate, energy efficiency, SDR and
// a snapshot sampler for the radar receiver.

#pragma once

#include <algorithm>
#include <array>
#include <numeric>
#include <optional>
#include <random>
#include <utility>
#include <vector>

#include "coexist/core.hpp"
#include "coexist/scenario.hpp"

namespace coexist {

// ---------------------------------------------------------------------------
// Shifted codes and selection maps
// ---------------------------------------------------------------------------

/// q_i: [q; 0] circularly shifted down by i positions.
[[nodiscard]] inline CVec shifted_code(const CVec& q, int i, int N) {
  const int L = static_cast<int>(q.size());
  if (i < 0 || i >= N) throw DimensionError("shifted_code: shift index out of range");
  if (L > N) throw DimensionError("shifted_code: code longer than N");
  CVec out = CVec::Zero(N);
  for (int k = 0; k < L; ++k) out(positive_mod(k + i, N)) = q(k);
  return out;
}

/// Offset l_i = (nu0 - L + i) mod N of the codeword boundary inside the
/// window seen by range bin i.
[[nodiscard]] inline int segment_offset(int nu0, int L, int bin, int N) {
  return positive_mod(static_cast<long long>(nu0) - L + bin, N);
}

/// Index form of the 0/1 selection matrices A_{m,i}, B_{m,i} (N x MN).
/// Row r >= l of A picks symbol r - l of segment m; row r < l of B picks
/// symbol N - l + r of segment m. Every other row is zero.
struct SelectionMap {
  int m = 0;    // transmit antenna, 0-based
  int N = 1;
  int ell = 0;  // segment offset l_i

  [[nodiscard]] int a_column(int row) const { return row >= ell ? m * N + row - ell : -1; }
  [[nodiscard]] int b_column(int row) const { return row < ell ? m * N + N - ell + row : -1; }

  [[nodiscard]] RMat dense_a(int M) const {
    RMat a = RMat::Zero(N, M * N);
    for (int r = 0; r < N; ++r)
      if (int c = a_column(r); c >= 0) a(r, c) = 1.0;
    return a;
  }
  [[nodiscard]] RMat dense_b(int M) const {
    RMat b = RMat::Zero(N, M * N);
    for (int r = 0; r < N; ++r)
      if (int c = b_column(r); c >= 0) b(r, c) = 1.0;
    return b;
  }
};

/// Cross-covariance of the symbol windows c_{m,i,d} and c_{m',i,d}:
/// A_{m,i} C A_{m',i}^T + B_{m,i} C B_{m',i}^T for a window offset `ell`.
template <typename Derived>
[[nodiscard]] auto covariance_segment_block(const Eigen::MatrixBase<Derived>& block, int ell) {
  using Scalar = typename Derived::Scalar;
  const auto N = block.rows();
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> out =
      Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Zero(N, N);
  const auto s = N - ell;
  out.block(ell, ell, s, s) = block.topLeftCorner(s, s);
  if (ell > 0) out.topLeftCorner(ell, ell) = block.bottomRightCorner(ell, ell);
  return out;
}

[[nodiscard]] inline CMat covariance_segment(const CMat& C, int M, int N, int m, int mp, int ell) {
  if (C.rows() != M * N || C.cols() != M * N)
    throw DimensionError("covariance_segment: C must be MN x MN");
  if (m < 0 || m >= M || mp < 0 || mp >= M || ell < 0 || ell >= N)
    throw DimensionError("covariance_segment: index out of range");
  return covariance_segment_block(C.block(m * N, mp * N, N, N), ell);
}

// ---------------------------------------------------------------------------
// Scenario instance
// ---------------------------------------------------------------------------

/// A fully specified, validated problem instance together with the
/// deterministic objects derived from it. Immutable after construction.
class Scenario {
 public:
  Scenario(SystemParams sys, StatisticsParams stats, CMat H)
      : sys_(std::move(sys)), stats_(std::move(stats)), H_(std::move(H)) {
    validate(sys_);
    validate(sys_, stats_);
    if (H_.rows() != sys_.K || H_.cols() != sys_.M)
      throw DimensionError("Scenario: channel matrix must be K x M");
    const int N = sys_.N;
    codes_.resize(N, N);
    for (int i = 0; i < N; ++i) codes_.col(i) = shifted_code(sys_.code, i, N);
    offsets_.resize(static_cast<std::size_t>(N));
    for (int i = 0; i < N; ++i)
      offsets_[static_cast<std::size_t>(i)] = segment_offset(stats_.nu0, sys_.L(), i, N);

    clutter_.assign(static_cast<std::size_t>(sys_.J), CMat::Zero(N, N));
    for (int j = 0; j < sys_.J; ++j) {
      CMat& r = clutter_[static_cast<std::size_t>(j)];
      for (int i = 0; i < N; ++i) {
        const double v = stats_.sigma2_gamma(i, j);
        if (v != 0.0) r.noalias() += v * codes_.col(i) * codes_.col(i).adjoint();
      }
      hermitize(r);
    }
    beta_by_beam_.assign(static_cast<std::size_t>(sys_.J), {});
    for (const auto& b : stats_.beta)
      beta_by_beam_[static_cast<std::size_t>(b.beam)].push_back(b);

    kronecker_ = true;
    for (const auto& a : stats_.alpha)
      if (!is_scaled_identity(a.cov)) kronecker_ = false;
    for (const auto& b : stats_.beta)
      if (!is_scaled_identity(b.cov)) kronecker_ = false;
  }

  [[nodiscard]] const SystemParams& system() const { return sys_; }
  [[nodiscard]] const StatisticsParams& statistics() const { return stats_; }
  [[nodiscard]] const CMat& channel() const { return H_; }
  [[nodiscard]] const CMat& codes() const { return codes_; }
  [[nodiscard]] auto code(int i) const { return codes_.col(i); }
  [[nodiscard]] int offset(int bin) const { return offsets_[static_cast<std::size_t>(bin)]; }
  [[nodiscard]] const CMat& clutter_covariance(int beam) const {
    return clutter_[static_cast<std::size_t>(beam)];
  }
  [[nodiscard]] const std::vector<BetaTerm>& beta_terms(int beam) const {
    return beta_by_beam_[static_cast<std::size_t>(beam)];
  }
  /// All alpha covariances are s I_K and all beta covariances s I_M, so F
  /// and every E_l factor as Kronecker products.
  [[nodiscard]] bool kronecker_structured() const { return kronecker_; }

  [[nodiscard]] const std::vector<Cell>& cells() const { return stats_.protected_cells; }
  [[nodiscard]] int cell_count() const { return static_cast<int>(stats_.protected_cells.size()); }
  [[nodiscard]] double sigma2_g(int k) const { return stats_.sigma2_g.at(cells()[static_cast<std::size_t>(k)]); }
  [[nodiscard]] double rho(int k) const { return stats_.rho.at(cells()[static_cast<std::size_t>(k)]); }

  [[nodiscard]] Scenario with_rho(double rho_linear) const {
    StatisticsParams s = stats_;
    set_rho(s, rho_linear);
    return Scenario(sys_, std::move(s), H_);
  }
  /// Same instance with every cross-system interference variance removed.
  [[nodiscard]] Scenario without_interference() const {
    StatisticsParams s = stats_;
    s.alpha.clear();
    s.beta.clear();
    return Scenario(sys_, std::move(s), H_);
  }
  /// Same instance with the clutter variances set to zero.
  [[nodiscard]] Scenario without_clutter() const {
    StatisticsParams s = stats_;
    s.sigma2_gamma.setZero();
    return Scenario(sys_, std::move(s), H_);
  }

 private:
  static bool is_scaled_identity(const CMat& x) {
    const cd d = x(0, 0);
    for (Eigen::Index j = 0; j < x.cols(); ++j)
      for (Eigen::Index i = 0; i < x.rows(); ++i)
        if (x(i, j) != (i == j ? d : cd(0.0))) return false;
    return d.imag() == 0.0;
  }

  SystemParams sys_;
  StatisticsParams stats_;
  CMat H_;
  CMat codes_;
  std::vector<int> offsets_;
  std::vector<CMat> clutter_;
  std::vector<std::vector<BetaTerm>> beta_by_beam_;
  bool kronecker_ = false;
};

// ---------------------------------------------------------------------------
// Radar disturbance
// ---------------------------------------------------------------------------

/// Sum over bins and antenna pairs of sigma2_beta * C_{m,m',i} for one beam.
[[nodiscard]] inline CMat data_interference(const Scenario& sc, const CMat& C, int beam) {
  const auto& sys = sc.system();
  const int N = sys.N, M = sys.M;
  if (C.rows() != M * N || C.cols() != M * N)
    throw DimensionError("data_interference: C must be MN x MN");
  CMat out = CMat::Zero(N, N);
  const auto& terms = sc.beta_terms(beam);
  if (terms.empty()) return out;
  // Diagonal-only covariances only ever touch sum_m C_mm.
  CMat diag_sum = CMat::Zero(N, N);
  for (int m = 0; m < M; ++m) diag_sum += C.block(m * N, m * N, N, N);
  for (const auto& t : terms) {
    const int ell = sc.offset(t.bin);
    bool diagonal = true;
    for (int m = 0; m < M && diagonal; ++m)
      for (int mp = 0; mp < M; ++mp)
        if ((m != mp && t.cov(m, mp) != cd(0.0)) || t.cov(m, m) != t.cov(0, 0)) {
          diagonal = false;
          break;
        }
    if (diagonal) {
      out += t.cov(0, 0) * covariance_segment_block(diag_sum, ell);
      continue;
    }
    for (int m = 0; m < M; ++m)
      for (int mp = 0; mp < M; ++mp)
        if (t.cov(m, mp) != cd(0.0))
          out += t.cov(m, mp) * covariance_segment_block(C.block(m * N, mp * N, N, N), ell);
  }
  hermitize(out);
  return out;
}

/// Disturbance covariance seen by beam j (clutter + data interference + noise).
[[nodiscard]] inline CMat radar_disturbance(const Scenario& sc, const CMat& C, double pr, int beam) {
  CMat d = pr * sc.clutter_covariance(beam) + data_interference(sc, C, beam);
  d.diagonal().array() += sc.system().pu;
  hermitize(d);
  return d;
}

/// SDR at protected cell k for filter w.
[[nodiscard]] inline double sdr(const Scenario& sc, const CMat& C, double pr, const CVec& w, int k) {
  const Cell cell = sc.cells()[static_cast<std::size_t>(k)];
  const double num = pr * sc.sigma2_g(k) * std::norm(w.dot(sc.code(cell.range)));
  const double den = std::real(w.dot(radar_disturbance(sc, C, pr, cell.beam) * w));
  return num / den;
}

// ---------------------------------------------------------------------------
// Equivalent channel
// ---------------------------------------------------------------------------

struct KroneckerFactors {
  CMat P;  // H^H H, M x M
  CMat Q;  // (Pr sum_i s_i q_i q_i^H + Pv I)^{-1}, N x N
};

struct EquivalentChannel {
  CMat F;               // MN x MN, Hermitian PSD
  RVec eigenvalues;     // ascending
  CMat eigenvectors;
  std::optional<KroneckerFactors> kron;  // F = P (x) Q when present

  /// Rows of G with F = G^H G, keeping only eigenvalues above the rank
  /// threshold 1e-12 * max.
  [[nodiscard]] CMat root() const {
    const double top = eigenvalues.size() ? eigenvalues.maxCoeff() : 0.0;
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < eigenvalues.size(); ++i)
      if (eigenvalues(i) > 1e-12 * top && eigenvalues(i) > 0) keep.push_back(i);
    CMat g(static_cast<Eigen::Index>(keep.size()), F.cols());
    for (std::size_t r = 0; r < keep.size(); ++r)
      g.row(static_cast<Eigen::Index>(r)) =
          std::sqrt(eigenvalues(keep[r])) * eigenvectors.col(keep[r]).adjoint();
    return g;
  }
};

/// Comm-receiver disturbance covariance Pr sum_i Sigma_alpha,i (x) q_i q_i^H + Pv I
/// (KN x KN).
[[nodiscard]] inline CMat comm_disturbance(const Scenario& sc, double pr) {
  const auto& sys = sc.system();
  const int N = sys.N, K = sys.K;
  CMat d = CMat::Zero(K * N, K * N);
  for (const auto& a : sc.statistics().alpha) {
    const CMat qq = sc.code(a.bin) * sc.code(a.bin).adjoint();
    for (int k = 0; k < K; ++k)
      for (int kp = 0; kp < K; ++kp)
        if (a.cov(k, kp) != cd(0.0)) d.block(k * N, kp * N, N, N) += pr * a.cov(k, kp) * qq;
  }
  d.diagonal().array() += sys.pv;
  hermitize(d);
  return d;
}

[[nodiscard]] inline EquivalentChannel equivalent_channel(const Scenario& sc, double pr) {
  if (!(pr >= 0)) throw DimensionError("equivalent_channel: Pr must be >= 0");
  const auto& sys = sc.system();
  const int N = sys.N, M = sys.M;
  EquivalentChannel out;
  if (sc.kronecker_structured()) {
    CMat r = CMat::Zero(N, N);
    for (const auto& a : sc.statistics().alpha)
      r.noalias() += pr * a.cov(0, 0).real() * sc.code(a.bin) * sc.code(a.bin).adjoint();
    r.diagonal().array() += sys.pv;
    hermitize(r);
    Eigen::LLT<CMat> llt(r);
    if (llt.info() != Eigen::Success)
      throw NumericalError("equivalent_channel: disturbance covariance is not positive definite");
    KroneckerFactors kf;
    kf.Q = llt.solve(CMat::Identity(N, N));
    hermitize(kf.Q);
    kf.P = sc.channel().adjoint() * sc.channel();
    hermitize(kf.P);
    out.F = kron(kf.P, kf.Q);
    Eigen::SelfAdjointEigenSolver<CMat> ep(kf.P), eq(kf.Q);
    RVec vals(M * N);
    CMat vecs(M * N, M * N);
    for (int a = 0; a < M; ++a)
      for (int b = 0; b < N; ++b) {
        vals(a * N + b) = std::max(0.0, ep.eigenvalues()(a)) * eq.eigenvalues()(b);
        vecs.col(a * N + b) = kron(ep.eigenvectors().col(a), eq.eigenvectors().col(b));
      }
    std::vector<int> order(static_cast<std::size_t>(M * N));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int x, int y) { return vals(x) < vals(y); });
    out.eigenvalues.resize(M * N);
    out.eigenvectors.resize(M * N, M * N);
    for (int i = 0; i < M * N; ++i) {
      out.eigenvalues(i) = vals(order[static_cast<std::size_t>(i)]);
      out.eigenvectors.col(i) = vecs.col(order[static_cast<std::size_t>(i)]);
    }
    out.kron = std::move(kf);
  } else {
    const CMat d = comm_disturbance(sc, pr);
    Eigen::LLT<CMat> llt(d);
    if (llt.info() != Eigen::Success)
      throw NumericalError("equivalent_channel: disturbance covariance is not positive definite");
    const CMat hk = kron(sc.channel(), CMat::Identity(N, N));
    const CMat t = llt.matrixL().solve(hk);
    out.F = t.adjoint() * t;
    hermitize(out.F);
    Eigen::SelfAdjointEigenSolver<CMat> es(out.F);
    out.eigenvalues = es.eigenvalues().cwiseMax(0.0);
    out.eigenvectors = es.eigenvectors();
  }
  hermitize(out.F);
  return out;
}

// ---------------------------------------------------------------------------
// SDR constraint data
// ---------------------------------------------------------------------------

/// trace(E_l C) <= a_l, l = 0..U-1, with the last row the power budget
/// (E_{U-1} = I, a_{U-1} = N Pc_max).
struct SdrConstraintData {
  int M = 1;
  int N = 1;
  bool kronecker = false;      // blocks[l] is G_l with E_l = I_M (x) G_l
  std::vector<CMat> blocks;    // size U-1; N x N (kronecker) or MN x MN
  RVec a;                      // size U
  std::vector<Cell> cells;     // constraint index -> protected cell

  [[nodiscard]] int U() const { return static_cast<int>(a.size()); }

  [[nodiscard]] CMat E(int l) const {
    const int mn = M * N;
    if (l == U() - 1) return CMat::Identity(mn, mn);
    const CMat& b = blocks[static_cast<std::size_t>(l)];
    return kronecker ? kron(CMat::Identity(M, M), b) : b;
  }

  [[nodiscard]] double trace_with(int l, const CMat& C) const {
    if (l == U() - 1) return C.trace().real();
    const CMat& b = blocks[static_cast<std::size_t>(l)];
    if (!kronecker) return trace_product_hermitian(b, C);
    double acc = 0.0;
    for (int m = 0; m < M; ++m) acc += trace_product_hermitian(b, C.block(m * N, m * N, N, N));
    return acc;
  }
};

namespace detail {

/// Masked outer product for window offset ell: u[k] = w[(k + ell) mod N],
/// G = u_A u_A^H + u_B u_B^H with the split at N - ell.
inline CMat window_outer(const CVec& w, int ell) {
  const auto N = w.size();
  CVec u(N);
  for (Eigen::Index k = 0; k < N; ++k) u(k) = w((k + ell) % N);
  CMat g = CMat::Zero(N, N);
  const auto s = N - ell;
  g.topLeftCorner(s, s).noalias() = u.head(s) * u.head(s).adjoint();
  if (ell > 0) g.bottomRightCorner(ell, ell).noalias() = u.tail(ell) * u.tail(ell).adjoint();
  return g;
}

}  // namespace detail

/// Constraint matrices and budgets for filters `filters[k]` (aligned with
/// sc.cells()) and radar power `pr`.
[[nodiscard]] inline SdrConstraintData sdr_constraint_data(const Scenario& sc,
                                                           const std::vector<CVec>& filters,
                                                           double pr) {
  const auto& sys = sc.system();
  const int N = sys.N, M = sys.M, X = sc.cell_count();
  if (static_cast<int>(filters.size()) != X)
    throw DimensionError("sdr_constraint_data: one filter per protected cell expected");
  SdrConstraintData out;
  out.M = M;
  out.N = N;
  out.kronecker = sc.kronecker_structured();
  out.cells = sc.cells();
  out.a.resize(X + 1);
  out.a(X) = N * sys.pc_max;
  out.blocks.reserve(static_cast<std::size_t>(X));
  for (int k = 0; k < X; ++k) {
    const Cell cell = sc.cells()[static_cast<std::size_t>(k)];
    const CVec& w = filters[static_cast<std::size_t>(k)];
    const double gain = std::norm(w.dot(sc.code(cell.range)));
    const double clutter = std::real(w.dot(sc.clutter_covariance(cell.beam) * w));
    out.a(k) = pr * sc.sigma2_g(k) / sc.rho(k) * gain - pr * clutter - sys.pu * w.squaredNorm();

    const auto& terms = sc.beta_terms(cell.beam);
    if (out.kronecker) {
      CMat g = CMat::Zero(N, N);
      for (const auto& t : terms) g += t.cov(0, 0).real() * detail::window_outer(w, sc.offset(t.bin));
      hermitize(g);
      out.blocks.push_back(std::move(g));
    } else {
      CMat e = CMat::Zero(M * N, M * N);
      for (const auto& t : terms) {
        const CMat g = detail::window_outer(w, sc.offset(t.bin));
        for (int r = 0; r < M; ++r)
          for (int c = 0; c < M; ++c)
            if (t.cov(c, r) != cd(0.0)) e.block(r * N, c * N, N, N) += t.cov(c, r) * g;
      }
      hermitize(e);
      out.blocks.push_back(std::move(e));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Figures of merit
// ---------------------------------------------------------------------------

/// Achievable rate (W/N) log2 det(I + F C) in bit/s, evaluated in the MN x MN
/// form through the root of F.
[[nodiscard]] inline double rate(const CMat& C, const EquivalentChannel& ch, const SystemParams& sys) {
  const CMat g = ch.root();
  if (g.rows() == 0) return 0.0;
  CMat m = g * C * g.adjoint();
  hermitize(m);
  m.diagonal().array() += 1.0;
  return sys.bandwidth_hz / sys.N * logdet_hpd(m) * kLog2e;
}

/// Bits per Joule: R / (trace(C)/(N eta) + omega).
[[nodiscard]] inline double energy_efficiency(double trace_c, double rate_bps, const SystemParams& sys) {
  return rate_bps / (trace_c / (sys.N * sys.eta) + sys.omega);
}

[[nodiscard]] inline double energy_efficiency(const CMat& C, double rate_bps, const SystemParams& sys) {
  return energy_efficiency(C.trace().real(), rate_bps, sys);
}

// ---------------------------------------------------------------------------
// Snapshot sampler
// ---------------------------------------------------------------------------

/// One radar observation split into its target-echo term and the sum of the
/// clutter, data-interference and noise terms.
struct RadarSnapshot {
  CVec signal;
  CVec disturbance;
};

/// Draws radar receiver snapshots for a fixed design (C, Pr). The comm
/// codeword stream is shared by all beams within one draw.
class RadarSnapshotSampler {
 public:
  RadarSnapshotSampler(const Scenario& sc, const CMat& C, double pr) : sc_(&sc), pr_(pr) {
    const auto& sys = sc.system();
    if (C.rows() != sys.MN()) throw DimensionError("RadarSnapshotSampler: C must be MN x MN");
    CMat c = C;
    hermitize(c);
    Eigen::SelfAdjointEigenSolver<CMat> es(c);
    const RVec vals = es.eigenvalues().cwiseMax(0.0);
    c_root_ = es.eigenvectors() * vals.cwiseSqrt().asDiagonal();
    beta_root_.resize(static_cast<std::size_t>(sys.J));
    for (int j = 0; j < sys.J; ++j)
      for (const auto& t : sc.beta_terms(j)) {
        CMat cov = t.cov;
        hermitize(cov);
        Eigen::SelfAdjointEigenSolver<CMat> eb(cov);
        beta_root_[static_cast<std::size_t>(j)].push_back(
            eb.eigenvectors() * eb.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal());
      }
  }

  /// Disturbance vector of every beam for one independent draw.
  template <typename Rng>
  std::vector<CVec> draw_disturbance(Rng& rng) const {
    const auto& sys = sc_->system();
    const int N = sys.N, M = sys.M, L = sys.L();
    // Windows reference codewords p-2 .. p+1 depending on floor((nu0-L+i)/N).
    std::array<CVec, 4> words;
    for (auto& w : words) w = c_root_ * standard_normal(sys.MN(), rng);

    std::vector<CVec> out(static_cast<std::size_t>(sys.J));
    for (int j = 0; j < sys.J; ++j) {
      CVec d = std::sqrt(sys.pu) * standard_normal(N, rng);
      for (int i = 0; i < N; ++i) {
        const double v = sc_->statistics().sigma2_gamma(i, j);
        if (v != 0.0) d += std::sqrt(pr_ * v) * draw_scalar(rng) * sc_->code(i);
      }
      const auto& terms = sc_->beta_terms(j);
      for (std::size_t t = 0; t < terms.size(); ++t) {
        const int bin = terms[t].bin;
        const long long shift = static_cast<long long>(sc_->statistics().nu0) - L + bin;
        const int ell = positive_mod(shift, N);
        const long long fl = (shift - ell) / N;  // floor((nu0-L+i)/N) in {-1, 0, 1}
        const CVec& cur = words[static_cast<std::size_t>(2 - fl)];
        const CVec& prev = words[static_cast<std::size_t>(1 - fl)];
        const CVec beta = beta_root_[static_cast<std::size_t>(j)][t] * standard_normal(M, rng);
        for (int m = 0; m < M; ++m) {
          if (beta(m) == cd(0.0)) continue;
          // Top ell symbols: tail of the earlier codeword; the rest: head of the later one.
          d.head(ell) += beta(m) * prev.segment(m * N + N - ell, ell);
          d.tail(N - ell) += beta(m) * cur.segment(m * N, N - ell);
        }
      }
      out[static_cast<std::size_t>(j)] = std::move(d);
    }
    return out;
  }

  /// Target-echo term at protected cell k.
  template <typename Rng>
  CVec draw_signal(int k, Rng& rng) const {
    const Cell cell = sc_->cells()[static_cast<std::size_t>(k)];
    const cd g = std::sqrt(sc_->sigma2_g(k)) * draw_scalar(rng);
    return std::sqrt(pr_) * g * sc_->code(cell.range);
  }

  template <typename Rng>
  RadarSnapshot draw(int k, Rng& rng) const {
    const Cell cell = sc_->cells()[static_cast<std::size_t>(k)];
    RadarSnapshot s;
    s.signal = draw_signal(k, rng);
    s.disturbance = std::move(draw_disturbance(rng)[static_cast<std::size_t>(cell.beam)]);
    return s;
  }

 private:
  template <typename Rng>
  static cd draw_scalar(Rng& rng) {
    std::normal_distribution<double> n(0.0, std::sqrt(0.5));
    const double re = n(rng);
    return {re, n(rng)};
  }
  template <typename Rng>
  static CVec standard_normal(int n, Rng& rng) {
    CVec v(n);
    for (int i = 0; i < n; ++i) v(i) = draw_scalar(rng);
    return v;
  }

  const Scenario* sc_;
  double pr_;
  CMat c_root_;
  std::vector<std::vector<CMat>> beta_root_;
};

/// One snapshot at protected cell k for design (C, Pr).
template <typename Rng>
[[nodiscard]] RadarSnapshot simulate_radar_snapshot(const Scenario& sc, const CMat& C, double pr,
                                                    int k, Rng& rng) {
  return RadarSnapshotSampler(sc, C, pr).draw(k, rng);
}

}  // namespace coexist
