// SPDX-License-Identifier: Apache-2.0
//
// Codebook-covariance optimization for fixed radar filters and power.
//
// The energy-efficiency ratio is handled by Dinkelbach's method. Each
// parametric subproblem
//
//   max_C  ln det(I + F C) - lambda' tr(C)   s.t.  tr(E_l C) <= a_l,  C >= 0
//
// is solved through its Lagrange dual, whose maximizer for fixed multipliers
// is a generalized waterfilling on the eigenvalues of Z^{-1} F Z^{-H} with
// Z Z^H = lambda' I + sum_l mu_l E_l.
//
// Internally every constraint is rescaled to tr(E_l C / n_l) <= a_l / n_l with
// n_l ~ a_l, which keeps the multipliers on a common scale. Public functions
// take and return multipliers in the original units.

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "coexist/signal_model.hpp"

namespace coexist {

// ---------------------------------------------------------------------------
// Options and results
// ---------------------------------------------------------------------------

enum class DualMethod { quasi_newton, projected_gradient };
enum class StepSchedule { diminishing, armijo };

struct DualOptions {
  DualMethod method = DualMethod::quasi_newton;
  double tolerance = 1e-9;     // KKT residual, scaled units
  int max_iterations = 1000;
  double step0 = 1.0;          // projected gradient: alpha_k = step0 / k
  StepSchedule schedule = StepSchedule::diminishing;
  double armijo_sigma = 1e-4;
  double armijo_factor = 0.5;
  int armijo_max = 50;
};

struct DinkelbachOptions {
  double tolerance = 1e-9;     // stop when F(lambda) <= tolerance * lambda * h
  int max_iterations = 50;
  DualOptions dual;
};

enum class DualStatus { converged, max_iterations, stalled };

struct DualResult {
  RVec mu;                      // original units
  double g = 0.0;               // dual objective (concave form)
  RVec gradient;                // tr(E_l C) - a_l
  double kkt_residual = 0.0;    // scaled units
  int iterations = 0;
  int evaluations = 0;
  DualStatus status = DualStatus::converged;
  std::vector<double> kkt_history;
};

struct DinkelbachStep {
  double lambda = 0.0;
  double value = 0.0;      // f(C_i) - lambda_i h(C_i)
  double trace_c = 0.0;
  double rate = 0.0;
  int dual_iterations = 0;
  int dual_evaluations = 0;
};

struct CodebookResult {
  CMat C;
  double rate = 0.0;       // bit/s
  double trace_c = 0.0;
  double ee = 0.0;         // bit/J
  RVec mu;                 // final multipliers, original units
  bool converged = true;
  std::vector<DinkelbachStep> trace;
};

// ---------------------------------------------------------------------------
// Constraint scaling
// ---------------------------------------------------------------------------

namespace detail {

/// Scale n_l for each constraint. a_l < 0 is infeasible; a_l ~ 0 falls back to
/// a fraction of the interference seen with isotropic full power.
inline RVec constraint_scales(const SdrConstraintData& data, double pc_max) {
  const int U = data.U();
  RVec n(U);
  for (int l = 0; l < U; ++l) {
    const double a = data.a(l);
    if (a < 0)
      throw InfeasibleError("SDR residual budget a_" + std::to_string(l) +
                            " is negative for the current radar design");
    double ref = 0.0;
    if (l == U - 1) {
      ref = data.M * data.N * pc_max / data.M;
    } else {
      const CMat& b = data.blocks[static_cast<std::size_t>(l)];
      ref = b.trace().real() * (data.kronecker ? data.M : 1) * pc_max / data.M;
    }
    n(l) = std::max(a, 1e-9 * ref);
    if (!(n(l) > 0)) n(l) = 1.0;
  }
  return n;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Dual kernels
// ---------------------------------------------------------------------------

/// Result of one dual evaluation in scaled units.
struct DualEval {
  double g = -std::numeric_limits<double>::infinity();
  RVec grad;
  double magnitude = 0.0;  // |sum over modes| + |mu . a|, sets the rounding level of g
  bool ok = false;
};

/// General kernel: works on the full MN x MN matrices.
class DenseDualKernel {
 public:
  DenseDualKernel(const EquivalentChannel& ch, const SdrConstraintData& data, double pc_max)
      : F_(ch.F), mn_(static_cast<int>(ch.F.rows())) {
    scale_ = detail::constraint_scales(data, pc_max);
    a_ = data.a.cwiseQuotient(scale_);
    const int U = data.U();
    E_.reserve(static_cast<std::size_t>(U - 1));
    for (int l = 0; l < U - 1; ++l) E_.push_back(data.E(l) / scale_(l));
    f_vals_ = ch.eigenvalues;
    f_vecs_ = ch.eigenvectors;
  }

  [[nodiscard]] int U() const { return static_cast<int>(a_.size()); }
  [[nodiscard]] const RVec& scale() const { return scale_; }
  [[nodiscard]] const RVec& budget() const { return a_; }
  void set_lambda(double lp) { lambda_ = lp; }
  [[nodiscard]] double lambda() const { return lambda_; }

  DualEval evaluate(const RVec& mu) {
    DualEval out;
    const int U = this->U();
    const double c = lambda_ + mu(U - 1) / scale_(U - 1);
    bool sdr_zero = true;
    for (int l = 0; l < U - 1; ++l) sdr_zero = sdr_zero && mu(l) == 0.0;
    RVec xi;
    if (sdr_zero) {
      if (!(c > 0)) return out;
      xi = f_vals_ / c;
      X_ = f_vecs_ / std::sqrt(c);
    } else {
      CMat z = CMat::Identity(mn_, mn_) * c;
      for (int l = 0; l < U - 1; ++l)
        if (mu(l) != 0.0) z += mu(l) * E_[static_cast<std::size_t>(l)];
      Eigen::LLT<CMat> llt(z);
      if (llt.info() != Eigen::Success) return out;
      const auto L = llt.matrixL();
      CMat t = L.solve(F_);
      CMat w = L.solve(t.adjoint());
      hermitize(w);
      Eigen::SelfAdjointEigenSolver<CMat> es(w);
      if (es.info() != Eigen::Success) throw NumericalError("dual kernel: eigensolver failed");
      xi = es.eigenvalues();
      X_ = llt.matrixU().solve(es.eigenvectors());
    }
    xi_ = xi;
    d_ = (1.0 - xi.array().max(1.0).inverse()).matrix();
    double gsum = 0.0;
    active_.clear();
    for (Eigen::Index b = 0; b < xi.size(); ++b)
      if (xi(b) > 1.0) {
        gsum += 1.0 - 1.0 / xi(b) - std::log(xi(b));
        active_.push_back(b);
      }
    C_ = CMat::Zero(mn_, mn_);
    for (auto b : active_) C_.noalias() += d_(b) * X_.col(b) * X_.col(b).adjoint();
    hermitize(C_);
    out.grad.resize(U);
    for (int l = 0; l < U - 1; ++l)
      out.grad(l) = trace_product_hermitian(E_[static_cast<std::size_t>(l)], C_) - a_(l);
    trace_c_ = C_.trace().real();
    out.grad(U - 1) = trace_c_ / scale_(U - 1) - a_(U - 1);
    out.g = gsum - mu.dot(a_);
    out.magnitude = std::abs(gsum) + std::abs(mu.dot(a_));
    out.ok = true;
    return out;
  }

  /// Sum over active modes of ln(1 + s (xi - 1)): ln det(I + F s C).
  [[nodiscard]] double logdet(double s = 1.0) const {
    double acc = 0.0;
    for (auto b : active_) acc += std::log1p(s * (xi_(b) - 1.0));
    return acc;
  }
  [[nodiscard]] double trace_c() const { return trace_c_; }
  [[nodiscard]] CMat primal() const { return C_; }

 private:
  CMat F_;
  int mn_;
  RVec scale_, a_;
  std::vector<CMat> E_;
  RVec f_vals_;
  CMat f_vecs_;
  double lambda_ = 0.0;
  RVec xi_, d_;
  CMat X_, C_;
  std::vector<Eigen::Index> active_;
  double trace_c_ = 0.0;
};

/// Kernel for F = P (x) Q and E_l = I_M (x) G_l. Works on N x N matrices;
/// Scalar is double when Q and every G_l are real.
template <typename Scalar>
class KroneckerDualKernel {
 public:
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  KroneckerDualKernel(const EquivalentChannel& ch, const SdrConstraintData& data, double pc_max)
      : M_(data.M), N_(data.N) {
    if (!ch.kron || !data.kronecker)
      throw DimensionError("KroneckerDualKernel: factored channel and constraints required");
    scale_ = detail::constraint_scales(data, pc_max);
    a_ = data.a.cwiseQuotient(scale_);
    Q_ = cast(ch.kron->Q);
    const int U = data.U();
    for (int l = 0; l < U - 1; ++l)
      G_.push_back(cast(data.blocks[static_cast<std::size_t>(l)]) / Scalar(scale_(l)));
    Eigen::SelfAdjointEigenSolver<CMat> ep(ch.kron->P);
    p_ = ep.eigenvalues().cwiseMax(0.0);
    VP_ = ep.eigenvectors();
  }

  [[nodiscard]] int U() const { return static_cast<int>(a_.size()); }
  [[nodiscard]] const RVec& scale() const { return scale_; }
  [[nodiscard]] const RVec& budget() const { return a_; }
  void set_lambda(double lp) { lambda_ = lp; }
  [[nodiscard]] double lambda() const { return lambda_; }

  DualEval evaluate(const RVec& mu) {
    DualEval out;
    const int U = this->U();
    const double c = lambda_ + mu(U - 1) / scale_(U - 1);
    bool sdr_zero = true;
    for (int l = 0; l < U - 1; ++l) sdr_zero = sdr_zero && mu(l) == 0.0;
    if (sdr_zero) {
      if (!(c > 0)) return out;
      if (!q_eig_) {
        Eigen::SelfAdjointEigenSolver<Mat> es(Q_);
        q_vals_ = es.eigenvalues();
        q_vecs_ = es.eigenvectors();
        q_eig_ = true;
      }
      omega_ = q_vals_ / c;
      X_ = q_vecs_ / Scalar(std::sqrt(c));
    } else {
      Mat y = Mat::Identity(N_, N_) * Scalar(c);
      for (int l = 0; l < U - 1; ++l)
        if (mu(l) != 0.0) y += Scalar(mu(l)) * G_[static_cast<std::size_t>(l)];
      Eigen::LLT<Mat> llt(y);
      if (llt.info() != Eigen::Success) return out;
      const auto L = llt.matrixL();
      Mat t = L.solve(Q_);
      Mat w = L.solve(t.adjoint());
      w = (0.5 * (w + w.adjoint())).eval();
      Eigen::SelfAdjointEigenSolver<Mat> es(w);
      if (es.info() != Eigen::Success) throw NumericalError("dual kernel: eigensolver failed");
      omega_ = es.eigenvalues();
      X_ = llt.matrixU().solve(es.eigenvectors());
    }
    xnorm2_ = X_.colwise().squaredNorm().transpose();
    double gsum = 0.0;
    trace_c_ = 0.0;
    t_ = RVec::Zero(N_);
    d_ = RMat::Zero(M_, N_);
    for (int a = 0; a < M_; ++a)
      for (int b = 0; b < N_; ++b) {
        const double xi = p_(a) * omega_(b);
        if (xi > 1.0) {
          const double d = 1.0 - 1.0 / xi;
          d_(a, b) = d;
          t_(b) += d;
          gsum += d - std::log(xi);
          trace_c_ += d * xnorm2_(b);
        }
      }
    out.grad.resize(U);
    if (U > 1) {
      std::vector<Eigen::Index> act;
      for (int b = 0; b < N_; ++b)
        if (t_(b) > 0) act.push_back(b);
      Mat xs(N_, static_cast<Eigen::Index>(act.size()));
      Mat xt(N_, static_cast<Eigen::Index>(act.size()));
      for (std::size_t i = 0; i < act.size(); ++i) {
        xs.col(static_cast<Eigen::Index>(i)) = X_.col(act[i]);
        xt.col(static_cast<Eigen::Index>(i)) = X_.col(act[i]) * Scalar(t_(act[i]));
      }
      Mat csum = Mat::Zero(N_, N_);
      if (!act.empty()) csum.noalias() = xt * xs.adjoint();
      for (int l = 0; l < U - 1; ++l)
        out.grad(l) = trace_product_hermitian(G_[static_cast<std::size_t>(l)], csum) - a_(l);
    }
    out.grad(U - 1) = trace_c_ / scale_(U - 1) - a_(U - 1);
    out.g = gsum - mu.dot(a_);
    out.magnitude = std::abs(gsum) + std::abs(mu.dot(a_));
    out.ok = true;
    return out;
  }

  [[nodiscard]] double logdet(double s = 1.0) const {
    double acc = 0.0;
    for (int a = 0; a < M_; ++a)
      for (int b = 0; b < N_; ++b)
        if (d_(a, b) > 0) acc += std::log1p(s * (p_(a) * omega_(b) - 1.0));
    return acc;
  }
  [[nodiscard]] double trace_c() const { return trace_c_; }

  /// Full MN x MN covariance: block (m, m') = sum_a VP[m,a] conj(VP[m',a]) X D_a X^H.
  [[nodiscard]] CMat primal() const {
    const int MN = M_ * N_;
    CMat C = CMat::Zero(MN, MN);
    for (int a = 0; a < M_; ++a) {
      if (d_.row(a).maxCoeff() <= 0) continue;
      const CMat xc = X_.template cast<cd>();
      const CMat ca = xc * d_.row(a).transpose().asDiagonal() * xc.adjoint();
      for (int m = 0; m < M_; ++m)
        for (int mp = 0; mp < M_; ++mp) {
          // |VP(m,a)|^2 on the diagonal keeps real blocks exactly real.
          const cd coef = m == mp ? cd(std::norm(VP_(m, a))) : VP_(m, a) * std::conj(VP_(mp, a));
          C.block(m * N_, mp * N_, N_, N_) += coef * ca;
        }
    }
    hermitize(C);
    return C;
  }

 private:
  static Mat cast(const CMat& x) {
    if constexpr (std::is_same_v<Scalar, double>) {
      return x.real();
    } else {
      return x;
    }
  }

  int M_, N_;
  RVec scale_, a_;
  Mat Q_;
  std::vector<Mat> G_;
  RVec p_;
  CMat VP_;
  double lambda_ = 0.0;
  bool q_eig_ = false;
  RVec q_vals_;
  Mat q_vecs_;
  RVec omega_, xnorm2_, t_;
  RMat d_;
  Mat X_;
  double trace_c_ = 0.0;
};

/// Calls fn(kernel) with the cheapest kernel valid for (ch, data).
template <typename Fn>
decltype(auto) with_dual_kernel(const EquivalentChannel& ch, const SdrConstraintData& data,
                                double pc_max, Fn&& fn) {
  if (ch.kron && data.kronecker) {
    bool real = is_exactly_real(ch.kron->Q);
    for (const auto& b : data.blocks) real = real && is_exactly_real(b);
    if (real) {
      KroneckerDualKernel<double> k(ch, data, pc_max);
      return fn(k);
    }
    KroneckerDualKernel<cd> k(ch, data, pc_max);
    return fn(k);
  }
  DenseDualKernel k(ch, data, pc_max);
  return fn(k);
}

// ---------------------------------------------------------------------------
// Dual solvers (scaled units)
// ---------------------------------------------------------------------------

namespace detail {

/// Armijo sufficient increase, with slack for the rounding error of g so the
/// search does not stall once the remaining gain is below machine precision.
inline bool armijo_accepts(const DualEval& cur, const DualEval& next, const RVec& step,
                           double sigma) {
  if (!next.ok) return false;
  const double noise = 1e-13 * (1.0 + cur.magnitude);
  return next.g >= cur.g + sigma * cur.grad.dot(step) - noise;
}

inline double kkt_residual(const RVec& mu, const RVec& grad) {
  return (mu - (mu + grad).cwiseMax(0.0)).cwiseAbs().maxCoeff();
}

template <typename Kernel>
DualResult finish(Kernel& k, const RVec& mu, const DualEval& ev, DualResult r) {
  r.mu = mu.cwiseQuotient(k.scale());
  r.g = ev.g;
  r.gradient = ev.grad.cwiseProduct(k.scale());
  r.kkt_residual = kkt_residual(mu, ev.grad);
  return r;
}

/// Evaluates at `mu`; when the Lagrangian is unbounded there (Z singular)
/// nudges the power multiplier up until it is not.
template <typename Kernel>
DualEval evaluate_safe(Kernel& k, RVec& mu, int& evals) {
  DualEval ev = k.evaluate(mu);
  ++evals;
  const int u = k.U() - 1;
  for (int i = 0; i < 60 && !ev.ok; ++i) {
    mu(u) = std::max(mu(u) * 2.0, 1e-6);
    ev = k.evaluate(mu);
    ++evals;
  }
  if (!ev.ok) throw NumericalError("dual solver: could not find a bounded starting point");
  return ev;
}

template <typename Kernel>
DualResult solve_pg_scaled(Kernel& k, RVec mu, const DualOptions& opt) {
  DualResult r;
  mu = mu.cwiseMax(0.0);
  DualEval ev = evaluate_safe(k, mu, r.evaluations);
  for (int it = 1;; ++it) {
    const double kkt = kkt_residual(mu, ev.grad);
    r.kkt_history.push_back(kkt);
    if (kkt < opt.tolerance) {
      r.status = DualStatus::converged;
      break;
    }
    if (it > opt.max_iterations) {
      r.status = DualStatus::max_iterations;
      break;
    }
    r.iterations = it;
    if (opt.schedule == StepSchedule::diminishing) {
      RVec next = (mu + (opt.step0 / it) * ev.grad).cwiseMax(0.0);
      DualEval e2 = k.evaluate(next);
      ++r.evaluations;
      if (!e2.ok) {
        r.status = DualStatus::stalled;
        break;
      }
      mu = next;
      ev = e2;
    } else {
      double alpha = opt.step0;
      bool moved = false;
      for (int bt = 0; bt < opt.armijo_max; ++bt, alpha *= opt.armijo_factor) {
        RVec next = (mu + alpha * ev.grad).cwiseMax(0.0);
        DualEval e2 = k.evaluate(next);
        ++r.evaluations;
        if (armijo_accepts(ev, e2, next - mu, opt.armijo_sigma)) {
          mu = next;
          ev = e2;
          moved = true;
          break;
        }
      }
      if (!moved) {
        r.status = DualStatus::stalled;
        break;
      }
    }
  }
  // Leave the kernel state at mu.
  ev = k.evaluate(mu);
  return finish(k, mu, ev, std::move(r));
}

/// Projected quasi-Newton: free variables move along B_FF^{-1} grad_F with
/// B a damped-BFGS model of -Hessian(g); restricted variables (at the bound
/// with the gradient pushing outward) take a plain gradient step and are
/// clipped by the projection.
template <typename Kernel>
DualResult solve_qn_scaled(Kernel& k, RVec mu, const DualOptions& opt) {
  DualResult r;
  const int U = k.U();
  mu = mu.cwiseMax(0.0);
  DualEval ev = evaluate_safe(k, mu, r.evaluations);
  RMat B = RMat::Identity(U, U);
  bool scaled = false;

  auto armijo = [&](const RVec& dir, RVec& next, DualEval& e2) {
    double alpha = 1.0;
    for (int bt = 0; bt < opt.armijo_max; ++bt, alpha *= opt.armijo_factor) {
      next = (mu + alpha * dir).cwiseMax(0.0);
      if ((next - mu).cwiseAbs().maxCoeff() == 0.0) return false;
      e2 = k.evaluate(next);
      ++r.evaluations;
      if (armijo_accepts(ev, e2, next - mu, opt.armijo_sigma)) return true;
    }
    return false;
  };

  for (int it = 1;; ++it) {
    const double kkt = kkt_residual(mu, ev.grad);
    r.kkt_history.push_back(kkt);
    if (kkt < opt.tolerance) {
      r.status = DualStatus::converged;
      break;
    }
    if (it > opt.max_iterations) {
      r.status = DualStatus::max_iterations;
      break;
    }
    r.iterations = it;

    const double eps = 1e-8 * std::max(1.0, mu.cwiseAbs().maxCoeff());
    std::vector<int> free;
    RVec dir = RVec::Zero(U);
    for (int l = 0; l < U; ++l) {
      if (mu(l) <= eps && ev.grad(l) < 0)
        dir(l) = ev.grad(l);
      else
        free.push_back(l);
    }
    if (!free.empty()) {
      const auto nf = static_cast<Eigen::Index>(free.size());
      RMat bff(nf, nf);
      RVec gf(nf);
      for (Eigen::Index i = 0; i < nf; ++i) {
        gf(i) = ev.grad(free[static_cast<std::size_t>(i)]);
        for (Eigen::Index j = 0; j < nf; ++j)
          bff(i, j) = B(free[static_cast<std::size_t>(i)], free[static_cast<std::size_t>(j)]);
      }
      const RVec pf = bff.ldlt().solve(gf);
      for (Eigen::Index i = 0; i < nf; ++i) dir(free[static_cast<std::size_t>(i)]) = pf(i);
    }

    RVec next;
    DualEval e2;
    bool ok = armijo(dir, next, e2);
    if (!ok) {
      // Model direction failed: reset the model and try the gradient.
      B.setIdentity();
      scaled = false;
      ok = armijo(ev.grad, next, e2);
    }
    if (!ok) {
      r.status = DualStatus::stalled;
      break;
    }

    const RVec s = next - mu;
    const RVec y = -(e2.grad - ev.grad);
    const double sy = s.dot(y);
    if (!scaled && sy > 0) {
      B = RMat::Identity(U, U) * (y.squaredNorm() / sy);
      scaled = true;
    }
    const RVec bs = B * s;
    const double sbs = s.dot(bs);
    if (sbs > 0) {
      // Powell damping keeps B positive definite.
      double theta = 1.0;
      if (sy < 0.2 * sbs) theta = 0.8 * sbs / (sbs - sy);
      const RVec rr = theta * y + (1.0 - theta) * bs;
      const double sr = s.dot(rr);
      if (sr > 0) {
        B += rr * rr.transpose() / sr - bs * bs.transpose() / sbs;
        B = (0.5 * (B + B.transpose())).eval();
      }
    }
    mu = next;
    ev = e2;
  }
  // The kernel holds the state of the last evaluation; restore it at mu.
  ev = k.evaluate(mu);
  return finish(k, mu, ev, std::move(r));
}

template <typename Kernel>
DualResult solve_dual_scaled(Kernel& k, const RVec& mu0_scaled, const DualOptions& opt) {
  return opt.method == DualMethod::quasi_newton ? solve_qn_scaled(k, mu0_scaled, opt)
                                                : solve_pg_scaled(k, mu0_scaled, opt);
}

/// Default multipliers: SDR multipliers zero, power multiplier equal to
/// lambda' (or 1 when lambda' = 0), in scaled units.
template <typename Kernel>
RVec cold_start(const Kernel& k) {
  RVec mu = RVec::Zero(k.U());
  const double lp = k.lambda();
  mu(k.U() - 1) = (lp > 0 ? lp : 1.0) * k.scale()(k.U() - 1);
  return mu;
}

inline double to_lambda_prime(double lambda, const SystemParams& sys) {
  return lambda / (sys.eta * sys.bandwidth_hz * kLog2e);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Public dual operations (original units)
// ---------------------------------------------------------------------------

/// C(mu) maximizing the Lagrangian for energy-efficiency price `lambda` (bit/J).
[[nodiscard]] inline CMat primal_from_dual(const RVec& mu, double lambda, const EquivalentChannel& ch,
                                           const SdrConstraintData& data, const SystemParams& sys) {
  if ((mu.array() < 0).any()) throw DimensionError("primal_from_dual: mu must be >= 0");
  return with_dual_kernel(ch, data, sys.pc_max, [&](auto& k) {
    k.set_lambda(detail::to_lambda_prime(lambda, sys));
    const DualEval ev = k.evaluate(mu.cwiseProduct(k.scale()));
    if (!ev.ok) throw NumericalError("primal_from_dual: Lagrangian unbounded at mu");
    return k.primal();
  });
}

/// g(mu) = sum_{xi>1} (1 - 1/xi - ln xi) - sum_l mu_l a_l.
[[nodiscard]] inline double dual_objective(const RVec& mu, double lambda, const EquivalentChannel& ch,
                                           const SdrConstraintData& data, const SystemParams& sys) {
  return with_dual_kernel(ch, data, sys.pc_max, [&](auto& k) {
    k.set_lambda(detail::to_lambda_prime(lambda, sys));
    const DualEval ev = k.evaluate(mu.cwiseProduct(k.scale()));
    if (!ev.ok) throw NumericalError("dual_objective: Lagrangian unbounded at mu");
    return ev.g;
  });
}

/// dg/dmu_l = tr(E_l C(mu)) - a_l.
[[nodiscard]] inline RVec dual_gradient(const RVec& mu, double lambda, const EquivalentChannel& ch,
                                        const SdrConstraintData& data, const SystemParams& sys) {
  return with_dual_kernel(ch, data, sys.pc_max, [&](auto& k) {
    k.set_lambda(detail::to_lambda_prime(lambda, sys));
    const DualEval ev = k.evaluate(mu.cwiseProduct(k.scale()));
    if (!ev.ok) throw NumericalError("dual_gradient: Lagrangian unbounded at mu");
    return RVec(ev.grad.cwiseProduct(k.scale()));
  });
}

[[nodiscard]] inline DualResult solve_dual(double lambda, const EquivalentChannel& ch,
                                           const SdrConstraintData& data, const SystemParams& sys,
                                           const std::optional<RVec>& mu0, const DualOptions& opt) {
  return with_dual_kernel(ch, data, sys.pc_max, [&](auto& k) {
    k.set_lambda(detail::to_lambda_prime(lambda, sys));
    const RVec start = mu0 ? RVec(mu0->cwiseProduct(k.scale())) : detail::cold_start(k);
    return detail::solve_dual_scaled(k, start, opt);
  });
}

[[nodiscard]] inline DualResult solve_dual_pg(double lambda, const EquivalentChannel& ch,
                                              const SdrConstraintData& data, const SystemParams& sys,
                                              const std::optional<RVec>& mu0, DualOptions opt = {}) {
  opt.method = DualMethod::projected_gradient;
  return solve_dual(lambda, ch, data, sys, mu0, opt);
}

[[nodiscard]] inline DualResult solve_dual_qn(double lambda, const EquivalentChannel& ch,
                                              const SdrConstraintData& data, const SystemParams& sys,
                                              const std::optional<RVec>& mu0, DualOptions opt = {}) {
  opt.method = DualMethod::quasi_newton;
  return solve_dual(lambda, ch, data, sys, mu0, opt);
}

// ---------------------------------------------------------------------------
// Dinkelbach
// ---------------------------------------------------------------------------

namespace detail {

/// Largest s in (0, 1] with tr(E_l s C) <= a_l for every constraint, from the
/// scaled gradient (grad_l = t_l - a'_l).
inline double feasibility_scale(const RVec& grad, const RVec& budget) {
  double s = 1.0;
  for (Eigen::Index l = 0; l < grad.size(); ++l) {
    const double t = grad(l) + budget(l);
    if (t > budget(l)) s = std::min(s, budget(l) / t);
  }
  return std::max(s, 0.0);
}

template <typename Kernel>
CodebookResult dinkelbach_kernel(Kernel& k, double rate0, double trace0, const SystemParams& sys,
                                 const DinkelbachOptions& opt, const std::optional<RVec>& mu_warm) {
  const double per_nat = sys.bandwidth_hz / sys.N * kLog2e;
  auto h_of = [&](double tr) { return tr / (sys.N * sys.eta) + sys.omega; };

  CodebookResult out;
  out.converged = false;
  double lambda = rate0 / h_of(trace0);
  k.set_lambda(detail::to_lambda_prime(lambda, sys));
  RVec mu = mu_warm ? RVec(mu_warm->cwiseProduct(k.scale())) : cold_start(k);
  mu(k.U() - 1) = std::max(mu(k.U() - 1), 0.0);

  double best_ee = -1.0, best_lp = 0.0, best_s = 1.0;
  RVec best_mu = mu;
  for (int i = 0; i < opt.max_iterations; ++i) {
    k.set_lambda(detail::to_lambda_prime(lambda, sys));
    if (i == 0 && !mu_warm) mu = cold_start(k);
    DualResult dr = solve_dual_scaled(k, mu, opt.dual);
    mu = dr.mu.cwiseProduct(k.scale());
    const DualEval ev = k.evaluate(mu);
    const double s = feasibility_scale(ev.grad, k.budget());
    const double f = per_nat * k.logdet(s);
    const double tr = s * k.trace_c();
    const double h = h_of(tr);
    const double value = f - lambda * h;
    out.trace.push_back({lambda, value, tr, f, dr.iterations, dr.evaluations});
    if (f / h > best_ee) {
      best_ee = f / h;
      best_lp = k.lambda();
      best_s = s;
      best_mu = mu;
      out.rate = f;
      out.trace_c = tr;
    }
    if (value <= opt.tolerance * std::max(lambda, 1e-300) * h || value <= 0) {
      out.converged = true;
      break;
    }
    lambda = f / h;
  }
  // Keep the incoming point when no iterate improved on it.
  const double ee0 = rate0 / h_of(trace0);
  out.ee = best_ee;
  k.set_lambda(best_lp);
  const DualEval ev = k.evaluate(best_mu);
  (void)ev;
  out.C = best_s * k.primal();
  out.mu = best_mu.cwiseQuotient(k.scale());
  if (best_ee < ee0) out.ee = -1.0;  // caller keeps its own iterate
  return out;
}

}  // namespace detail

/// Maximizes EE(C) = f(C)/h(C) over the constraint set, starting from the
/// feasible covariance C0. The returned EE is never below EE(C0); when no
/// Dinkelbach iterate beats C0, C0 itself is returned.
[[nodiscard]] inline CodebookResult dinkelbach(const EquivalentChannel& ch, const SdrConstraintData& data,
                                               const CMat& C0, const SystemParams& sys,
                                               const DinkelbachOptions& opt = {},
                                               const std::optional<RVec>& mu_warm = std::nullopt) {
  const double rate0 = rate(C0, ch, sys);
  const double trace0 = C0.trace().real();
  CodebookResult out = with_dual_kernel(ch, data, sys.pc_max, [&](auto& k) {
    return detail::dinkelbach_kernel(k, rate0, trace0, sys, opt, mu_warm);
  });
  if (out.ee < 0) {
    out.C = C0;
    out.rate = rate0;
    out.trace_c = trace0;
    out.ee = energy_efficiency(trace0, rate0, sys);
  }
  return out;
}

/// Maximizes the rate alone (lambda = 0) over the constraint set.
[[nodiscard]] inline CodebookResult maximize_rate(const EquivalentChannel& ch, const SdrConstraintData& data,
                                                  const SystemParams& sys, const DualOptions& opt = {},
                                                  const std::optional<RVec>& mu_warm = std::nullopt) {
  return with_dual_kernel(ch, data, sys.pc_max, [&](auto& k) {
    k.set_lambda(0.0);
    RVec start = mu_warm ? RVec(mu_warm->cwiseProduct(k.scale())) : detail::cold_start(k);
    DualResult dr = detail::solve_dual_scaled(k, start, opt);
    const RVec mu = dr.mu.cwiseProduct(k.scale());
    const DualEval ev = k.evaluate(mu);
    const double s = detail::feasibility_scale(ev.grad, k.budget());
    CodebookResult out;
    out.rate = sys.bandwidth_hz / sys.N * kLog2e * k.logdet(s);
    out.trace_c = s * k.trace_c();
    out.ee = energy_efficiency(out.trace_c, out.rate, sys);
    out.C = s * k.primal();
    out.mu = dr.mu;
    out.converged = dr.status == DualStatus::converged;
    out.trace.push_back({0.0, out.rate, out.trace_c, out.rate, dr.iterations, dr.evaluations});
    return out;
  });
}

}  // namespace coexist
