// SPDX-License-Identifier: Apache-2.0
//
// Shared fixtures for the unit tests.

#pragma once

#include <random>

#include "coexist/coexist.hpp"

namespace coexist::testing {

inline SystemParams reference_system() {
  SystemParams s;
  s.code.resize(5);
  s.code << 1, 1, 1, -1, 1;
  validate(s);
  return s;
}

/// Scaled-down system for brute-force oracles.
inline SystemParams small_system(int N = 12, int M = 2, int K = 2, int J = 2) {
  SystemParams s;
  s.N = N;
  s.M = M;
  s.K = K;
  s.J = J;
  s.code.resize(3);
  s.code << 1, 1, -1;
  validate(s);
  return s;
}

inline CMat random_complex(int r, int c, std::mt19937_64& rng, double sd = 1.0) {
  std::normal_distribution<double> n(0.0, sd);
  CMat x(r, c);
  for (int j = 0; j < c; ++j)
    for (int i = 0; i < r; ++i) x(i, j) = cd(n(rng), n(rng));
  return x;
}

inline CMat random_hpd(int n, std::mt19937_64& rng, double scale = 1.0) {
  const CMat a = random_complex(n, n, rng);
  CMat c = scale * (a * a.adjoint() / n);
  hermitize(c);
  return c;
}

/// Reference statistics on `sys` with sampled interference and cells.
inline Scenario sampled_scenario(const SystemParams& sys, double sigma2, double delta, int cells,
                                 double rho_db, std::uint64_t seed, double sigma2_h = 3e-10) {
  StatisticsParams st;
  st.sigma2_gamma = RMat::Constant(sys.N, sys.J, 4.8e-17);
  st.sigma2_h = sigma2_h;
  const ScenarioSample smp = sample_scenario(sys, sigma2_h, delta, seed);
  apply_sample(sys, smp, sigma2, st);
  std::mt19937_64 rng(seed + 1000);
  set_protected_cells(st, sample_protected_cells(sys, cells, rng), 4.8e-16, db_to_linear(rho_db));
  return Scenario(sys, std::move(st), smp.H);
}

}  // namespace coexist::testing
