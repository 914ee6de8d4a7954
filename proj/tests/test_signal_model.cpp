#include <catch_amalgamated.hpp>

#include "test_helpers.hpp"

using namespace coexist;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

/// Time-domain bookkeeping: the comm echo from bin i reaches radar sample r
/// carrying the symbol sent r - (nu0 - L + i) symbol intervals after the
/// current codeword started. Returns (codeword, position) with codeword 0 the
/// one containing sample r = l and -1 the one before.
std::pair<int, int> symbol_at(int r, int nu0, int L, int bin, int N) {
  const int shift = positive_mod(static_cast<long long>(nu0) - L + bin, N);
  const int t = r - shift;
  return t >= 0 ? std::pair{0, t} : std::pair{-1, t + N};
}

/// Interference covariance at one beam built sample by sample.
CMat interference_oracle(const Scenario& sc, const CMat& C, int beam) {
  const auto& sys = sc.system();
  const int N = sys.N, M = sys.M, L = sys.L();
  CMat out = CMat::Zero(N, N);
  for (const auto& t : sc.beta_terms(beam))
    for (int r = 0; r < N; ++r)
      for (int s = 0; s < N; ++s) {
        const auto [wr, pr] = symbol_at(r, sc.statistics().nu0, L, t.bin, N);
        const auto [ws, ps] = symbol_at(s, sc.statistics().nu0, L, t.bin, N);
        if (wr != ws) continue;  // distinct codewords are independent
        for (int m = 0; m < M; ++m)
          for (int mp = 0; mp < M; ++mp) out(r, s) += t.cov(m, mp) * C(m * N + pr, mp * N + ps);
      }
  return out;
}

Scenario general_scenario(std::uint64_t seed, bool identity_covs) {
  const SystemParams sys = testing::small_system(12, 2, 2, 2);
  std::mt19937_64 rng(seed);
  StatisticsParams st;
  st.sigma2_gamma = RMat::Constant(sys.N, sys.J, 2e-15);
  st.nu0 = static_cast<int>(seed % 12);
  for (int i : {1, 4, 9}) {
    const CMat a = identity_covs ? CMat(1e-13 * CMat::Identity(2, 2)) : testing::random_hpd(2, rng, 1e-13);
    st.alpha.push_back({i, a});
  }
  for (int j = 0; j < sys.J; ++j)
    for (int i : {0, 5, 7, 11}) {
      const CMat b = identity_covs ? CMat(1e-13 * CMat::Identity(2, 2)) : testing::random_hpd(2, rng, 1e-13);
      st.beta.push_back({i, j, b});
    }
  set_protected_cells(st, {{0, 0}, {3, 1}, {6, 0}, {9, 1}}, 1e-12, 2.0);
  return Scenario(sys, std::move(st), testing::random_complex(2, 2, rng, std::sqrt(1.5e-10)));
}

}  // namespace

TEST_CASE("shifted codes are circular shifts of the zero-padded code", "[signal_model]") {
  const SystemParams sys = testing::reference_system();
  for (int i = 0; i < sys.N; ++i) {
    const CVec q = shifted_code(sys.code, i, sys.N);
    CHECK_THAT(q.squaredNorm(), WithinRel(100.0, 1e-12));
    for (int k = 0; k < sys.N; ++k) {
      const int src = positive_mod(k - i, sys.N);
      const cd expected = src < sys.L() ? sys.code(src) : cd(0.0);
      REQUIRE(q(k) == expected);
    }
  }
  CHECK_THROWS_AS(shifted_code(sys.code, sys.N, sys.N), DimensionError);
}

TEST_CASE("selection maps follow the time-domain symbol indexing", "[signal_model][oracle]") {
  const int N = 9, M = 3, L = 4;
  for (int nu0 = 0; nu0 < N; ++nu0)
    for (int bin = 0; bin < N; ++bin) {
      const int ell = segment_offset(nu0, L, bin, N);
      for (int m = 0; m < M; ++m) {
        const SelectionMap map{m, N, ell};
        const RMat a = map.dense_a(M), b = map.dense_b(M);
        for (int r = 0; r < N; ++r) {
          const auto [word, pos] = symbol_at(r, nu0, L, bin, N);
          const RMat& pick = word == 0 ? a : b;
          const RMat& other = word == 0 ? b : a;
          REQUIRE(pick(r, m * N + pos) == 1.0);
          REQUIRE(pick.row(r).sum() == 1.0);
          REQUIRE(other.row(r).sum() == 0.0);
        }
      }
    }
}

TEST_CASE("segment covariance equals A C A^T + B C B^T", "[signal_model][oracle]") {
  std::mt19937_64 rng(3);
  const int N = 7, M = 2;
  const CMat C = testing::random_hpd(M * N, rng);
  for (int ell = 0; ell < N; ++ell)
    for (int m = 0; m < M; ++m)
      for (int mp = 0; mp < M; ++mp) {
        const RMat am = SelectionMap{m, N, ell}.dense_a(M), bm = SelectionMap{m, N, ell}.dense_b(M);
        const RMat amp = SelectionMap{mp, N, ell}.dense_a(M), bmp = SelectionMap{mp, N, ell}.dense_b(M);
        const CMat dense = am.cast<cd>() * C * amp.transpose().cast<cd>() +
                           bm.cast<cd>() * C * bmp.transpose().cast<cd>();
        REQUIRE((covariance_segment(C, M, N, m, mp, ell) - dense).norm() < 1e-12 * C.norm());
      }
}

TEST_CASE("data interference matches the sample-by-sample oracle", "[signal_model][oracle]") {
  for (bool identity : {false, true})
    for (std::uint64_t seed : {1u, 2u, 3u}) {
      const Scenario sc = general_scenario(seed, identity);
      std::mt19937_64 rng(seed + 50);
      const CMat C = testing::random_hpd(sc.system().MN(), rng, 1e-3);
      for (int j = 0; j < sc.system().J; ++j) {
        const CMat ref = interference_oracle(sc, C, j);
        REQUIRE((data_interference(sc, C, j) - ref).norm() <= 1e-12 * ref.norm());
      }
    }
}

TEST_CASE("constraint matrices reproduce the filtered interference power", "[signal_model][oracle]") {
  for (bool identity : {false, true}) {
    const Scenario sc = general_scenario(9, identity);
    CHECK(sc.kronecker_structured() == identity);
    std::mt19937_64 rng(77);
    std::vector<CVec> filters;
    for (int k = 0; k < sc.cell_count(); ++k) filters.push_back(testing::random_complex(sc.system().N, 1, rng));
    const double pr = 0.7;
    const SdrConstraintData data = sdr_constraint_data(sc, filters, pr);
    REQUIRE(data.U() == sc.cell_count() + 1);
    const CMat C = testing::random_hpd(sc.system().MN(), rng, 1e-3);
    for (int k = 0; k < sc.cell_count(); ++k) {
      const CVec& w = filters[static_cast<std::size_t>(k)];
      const int beam = sc.cells()[static_cast<std::size_t>(k)].beam;
      const double direct = std::real(w.dot(interference_oracle(sc, C, beam) * w));
      CHECK_THAT(data.trace_with(k, C), WithinRel(direct, 1e-10));
      CHECK_THAT(trace_product_hermitian(data.E(k), C), WithinRel(direct, 1e-10));
      // a_k is the interference budget that puts the SDR exactly at rho.
      REQUIRE(data.a(k) > 0);
      const CMat Cs = C * (data.a(k) / direct);
      CHECK_THAT(sdr(sc, Cs, pr, w, k), WithinRel(sc.rho(k), 1e-9));
    }
    CHECK(data.a(data.U() - 1) == sc.system().N * sc.system().pc_max);
    CHECK(data.E(data.U() - 1) == CMat::Identity(sc.system().MN(), sc.system().MN()));
  }
}

TEST_CASE("rate agrees with the receive-side log-det", "[signal_model][oracle]") {
  for (bool identity : {false, true}) {
    const Scenario sc = general_scenario(4, identity);
    const auto& sys = sc.system();
    const int N = sys.N, K = sys.K;
    const double pr = 2.0;
    CMat D = CMat::Zero(K * N, K * N);
    for (const auto& a : sc.statistics().alpha)
      D += pr * kron(a.cov, CMat(sc.code(a.bin) * sc.code(a.bin).adjoint()));
    D.diagonal().array() += sys.pv;
    const CMat HI = kron(sc.channel(), CMat::Identity(N, N));
    std::mt19937_64 rng(8);
    const CMat C = testing::random_hpd(sys.MN(), rng, 1e-3);
    const Eigen::LLT<CMat> llt(D);
    const CMat Linv = llt.matrixL().solve(CMat::Identity(K * N, K * N));
    CMat S = Linv * HI * C * HI.adjoint() * Linv.adjoint();
    S.diagonal().array() += 1.0;
    const double ref = sys.bandwidth_hz / N * logdet_hpd(S) / std::log(2.0);

    const EquivalentChannel ch = equivalent_channel(sc, pr);
    CHECK(ch.kron.has_value() == identity);
    CHECK_THAT(rate(C, ch, sys), WithinRel(ref, 1e-10));
    const CMat F = HI.adjoint() * D.inverse() * HI;
    CHECK((ch.F - F).norm() <= 1e-9 * F.norm());
    CHECK(rate(CMat::Zero(sys.MN(), sys.MN()), ch, sys) == 0.0);
  }
}

TEST_CASE("energy efficiency is rate over consumed power", "[signal_model]") {
  const SystemParams sys = testing::reference_system();
  const CMat C = CMat::Identity(sys.MN(), sys.MN()) * 0.002;
  const double r = 3e6;
  const double consumed = C.trace().real() / sys.N / sys.eta + sys.omega;
  CHECK_THAT(energy_efficiency(C, r, sys), WithinRel(r / consumed, 1e-14));
}

TEST_CASE("radar disturbance is noise plus clutter plus interference", "[signal_model]") {
  const Scenario sc = general_scenario(5, false);
  std::mt19937_64 rng(1);
  const CMat C = testing::random_hpd(sc.system().MN(), rng, 1e-3);
  const double pr = 3.0;
  const int N = sc.system().N;
  CMat ref = CMat::Identity(N, N) * sc.system().pu;
  for (int i = 0; i < N; ++i) ref += pr * sc.statistics().sigma2_gamma(i, 1) * sc.code(i) * sc.code(i).adjoint();
  ref += interference_oracle(sc, C, 1);
  CHECK((radar_disturbance(sc, C, pr, 1) - ref).norm() <= 1e-12 * ref.norm());
}

TEST_CASE("sampled snapshots have the analytic disturbance covariance", "[signal_model][statistical]") {
  const Scenario sc = general_scenario(6, false);
  std::mt19937_64 rng(2);
  // Power comparable to the noise so every term is visible.
  const CMat C = testing::random_hpd(sc.system().MN(), rng, 0.2);
  const double pr = 5.0;
  const RadarSnapshotSampler sampler(sc, C, pr);
  const int N = sc.system().N;
  const int draws = 200000;
  CMat emp = CMat::Zero(N, N);
  for (int t = 0; t < draws; ++t) {
    const CVec d = sampler.draw_disturbance(rng)[0];
    emp.noalias() += d * d.adjoint();
  }
  emp /= draws;
  const CMat ref = radar_disturbance(sc, C, pr, 0);
  // Entry-wise standard error ~ ||ref|| / sqrt(draws); allow a wide margin.
  CHECK((emp - ref).norm() <= 0.02 * ref.norm());
}

TEST_CASE("noise-only cell matches Pr sigma_g^2 N / Pu empirically", "[signal_model][statistical]") {
  SystemParams sys = testing::small_system(20, 1, 1, 1);
  StatisticsParams st;
  st.sigma2_gamma = RMat::Zero(sys.N, sys.J);
  set_protected_cells(st, {{4, 0}}, 1e-15, 1.0);
  const Scenario sc(sys, st, CMat::Ones(1, 1));
  const double pr = 2.0;
  const CMat C = CMat::Zero(sys.MN(), sys.MN());
  CVec w = sc.code(4);
  w.normalize();
  const double closed = pr * 1e-15 * sys.N / sys.pu;
  CHECK_THAT(sdr(sc, C, pr, w, 0), WithinRel(closed, 1e-12));
  const SdrCheckReport rep = empirical_sdr(sc, C, pr, {w}, 400000, 99);
  CHECK_THAT(rep.rows[0].empirical, WithinRel(closed, 0.01));
}
