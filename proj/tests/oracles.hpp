// SPDX-License-Identifier: Apache-2.0
//
// Independent reference solvers used by the unit and acceptance tests. None
// of them touches the dual machinery of the library.

#pragma once

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "test_helpers.hpp"

namespace coexist::testing {

/// Small dense codebook problem in the form the library consumes.
struct DenseInstance {
  SystemParams sys;
  EquivalentChannel ch;
  SdrConstraintData data;
  double lambda = 0.0;   // bit/J
  double lambda_p = 0.0; // nats per unit trace
};

inline EquivalentChannel dense_channel(const CMat& F) {
  EquivalentChannel ch;
  ch.F = F;
  hermitize(ch.F);
  Eigen::SelfAdjointEigenSolver<CMat> es(ch.F);
  ch.eigenvalues = es.eigenvalues().cwiseMax(0.0);
  ch.eigenvectors = es.eigenvectors();
  return ch;
}

/// C maximizing log det(I + F C) - lp tr(C) without constraints.
inline CMat unconstrained_optimum(const CMat& F, double lp) {
  Eigen::SelfAdjointEigenSolver<CMat> es(F);
  const RVec v = es.eigenvalues();
  RVec p(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) p(i) = v(i) > lp ? 1.0 / lp - 1.0 / v(i) : 0.0;
  return es.eigenvectors() * p.asDiagonal() * es.eigenvectors().adjoint();
}

/// Random instance with MN = M N, U - 1 random PSD constraints and the power
/// cap; budgets are set below the unconstrained optimum so several bind.
inline DenseInstance random_dense_instance(int M, int N, int U, std::mt19937_64& rng) {
  DenseInstance in;
  in.sys.N = N;
  in.sys.M = M;
  in.sys.bandwidth_hz = 1e6;
  in.sys.eta = 0.85;
  in.sys.omega = 0.01;
  const int mn = M * N;
  std::uniform_real_distribution<double> u(0.0, 1.0);

  const CMat Q = random_complex(mn, mn, rng).householderQr().householderQ();
  RVec ev(mn);
  for (int i = 0; i < mn; ++i) ev(i) = 0.3 + 4.0 * u(rng);
  const CMat F = Q * ev.asDiagonal() * Q.adjoint();
  in.ch = dense_channel(F);
  in.lambda_p = 0.15 + 0.6 * u(rng);
  in.lambda = in.lambda_p * in.sys.eta * in.sys.bandwidth_hz * kLog2e;

  const CMat free = unconstrained_optimum(in.ch.F, in.lambda_p);
  in.data.M = M;
  in.data.N = N;
  in.data.kronecker = false;
  in.data.a.resize(U);
  for (int l = 0; l < U - 1; ++l) {
    const CMat r = random_complex(mn, 2, rng);
    CMat e = r * r.adjoint() + 0.05 * CMat::Identity(mn, mn);
    hermitize(e);
    const double t = trace_product_hermitian(e, free);
    in.data.a(l) = (0.3 + 0.8 * u(rng)) * std::max(t, 1e-3);
    in.data.blocks.push_back(std::move(e));
    in.data.cells.push_back({l, 0});
  }
  const double tr = free.trace().real();
  in.data.a(U - 1) = (0.5 + 0.8 * u(rng)) * std::max(tr, 1e-3);
  in.sys.pc_max = in.data.a(U - 1) / N;
  return in;
}

/// log det(I + F C) - lp tr(C), the subproblem objective in nats.
inline double subproblem_value(const CMat& F, const CMat& C, double lp) {
  Eigen::SelfAdjointEigenSolver<CMat> es(F);
  const CMat root = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
                    es.eigenvectors().adjoint();
  CMat m = root * C * root;
  hermitize(m);
  m.diagonal().array() += 1.0;
  return logdet_hpd(m) - lp * C.trace().real();
}

/// Projection onto the PSD cone by eigenvalue clipping.
inline CMat project_psd(const CMat& Y) {
  CMat h = Y;
  hermitize(h);
  Eigen::SelfAdjointEigenSolver<CMat> es(h);
  const CMat x = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).asDiagonal() * es.eigenvectors().adjoint();
  return x;
}

/// Primal oracle: augmented Lagrangian on the trace constraints with an
/// accelerated projected gradient on the PSD cone for each inner problem.
/// Returns the optimal C of max log det(I + F C) - lp tr(C) s.t.
/// tr(E_l C) <= a_l, C >= 0.
inline CMat primal_pg_oracle(const CMat& F, double lp, const std::vector<CMat>& E, const RVec& a,
                             int outer = 60, int inner = 3000) {
  const int n = static_cast<int>(F.rows());
  const int U = static_cast<int>(E.size());
  Eigen::SelfAdjointEigenSolver<CMat> es(F);
  const CMat root = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
                    es.eigenvectors().adjoint();
  double e_norm = 0.0;
  for (const auto& e : E) e_norm += e.squaredNorm();
  double pen = 1.0;
  RVec y = RVec::Zero(U);
  CMat C = CMat::Zero(n, n);

  // Ascent direction of  log det - lp tr - (pen/2) sum [tr(E C) - a + y/pen]_+^2.
  auto gradient = [&](const CMat& X) {
    CMat m = root * X * root;
    hermitize(m);
    m.diagonal().array() += 1.0;
    CMat g = root * m.ldlt().solve(root) - lp * CMat::Identity(n, n);
    for (int l = 0; l < U; ++l) {
      const double v = trace_product_hermitian(E[static_cast<std::size_t>(l)], X) - a(l) + y(l) / pen;
      if (v > 0) g -= pen * v * E[static_cast<std::size_t>(l)];
    }
    hermitize(g);
    return g;
  };

  for (int k = 0; k < outer; ++k) {
    const double lip = es.eigenvalues().maxCoeff() * es.eigenvalues().maxCoeff() + pen * e_norm;
    const double step = 1.0 / lip;
    CMat x = C, z = C;
    double t = 1.0;
    for (int it = 0; it < inner; ++it) {
      const CMat xn = project_psd(z + step * gradient(z));
      const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
      const double move = (xn - x).norm();
      // Restart the momentum when it points against the gradient map.
      if (trace_product_hermitian(xn - x, z - xn) > 0) {
        z = xn;
        t = 1.0;
      } else {
        z = xn + ((t - 1.0) / tn) * (xn - x);
        t = tn;
      }
      x = xn;
      if (move <= 1e-15 * std::max(1.0, x.norm())) break;
    }
    C = x;
    double viol = 0.0;
    for (int l = 0; l < U; ++l) {
      const double r = trace_product_hermitian(E[static_cast<std::size_t>(l)], C) - a(l);
      y(l) = std::max(0.0, y(l) + pen * r);
      viol = std::max(viol, std::max(r, 0.0) / std::max(a(l), 1e-12));
    }
    if (viol < 1e-12 && k > 3) break;
    if (viol > 1e-9) pen = std::min(pen * 4.0, 1e8);
  }
  return C;
}

/// Maximizer of a unimodal function on [lo, hi] by golden-section search.
inline double golden_section_max(const std::function<double(double)>& f, double lo, double hi,
                                 int iterations = 300) {
  const double r = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = lo, b = hi;
  double c = b - r * (b - a), d = a + r * (b - a);
  double fc = f(c), fd = f(d);
  for (int i = 0; i < iterations && b - a > 1e-16 * std::max(1.0, std::abs(b)); ++i) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - r * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + r * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

/// Scalar channel: one antenna, one symbol, gain f; constraints e_l p <= a_l.
struct ScalarInstance {
  SystemParams sys;
  EquivalentChannel ch;
  SdrConstraintData data;
  double p_max = 0.0;  // largest feasible power
};

inline ScalarInstance random_scalar_instance(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ScalarInstance s;
  s.sys.N = 1;
  s.sys.M = 1;
  s.sys.bandwidth_hz = 1e6;
  s.sys.eta = 0.5 + 0.5 * u(rng);
  s.sys.omega = std::pow(10.0, -3.0 + 2.0 * u(rng));
  s.sys.pc_max = std::pow(10.0, -3.0 + 2.0 * u(rng));
  const double f = std::pow(10.0, 2.0 + 4.0 * u(rng));
  CMat F(1, 1);
  F(0, 0) = f;
  s.ch = dense_channel(F);
  s.data.M = 1;
  s.data.N = 1;
  s.data.kronecker = false;
  const int extra = static_cast<int>(u(rng) * 3);
  s.data.a.resize(extra + 1);
  s.p_max = s.sys.pc_max;
  for (int l = 0; l < extra; ++l) {
    CMat e(1, 1);
    e(0, 0) = std::pow(10.0, -1.0 + 2.0 * u(rng));
    s.data.a(l) = e(0, 0).real() * s.sys.pc_max * (0.05 + 1.5 * u(rng));
    s.p_max = std::min(s.p_max, s.data.a(l) / e(0, 0).real());
    s.data.blocks.push_back(e);
    s.data.cells.push_back({l, 0});
  }
  s.data.a(extra) = s.sys.pc_max;
  return s;
}

inline double scalar_ee(const ScalarInstance& s, double p) {
  const double f = s.ch.F(0, 0).real();
  return s.sys.bandwidth_hz * std::log2(1.0 + f * p) / (p / s.sys.eta + s.sys.omega);
}

}  // namespace coexist::testing
