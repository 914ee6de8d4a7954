#include <catch_amalgamated.hpp>

#include "test_helpers.hpp"

using namespace coexist;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

Scenario reference_scenario(double rho_db, std::uint64_t seed, double sigma2 = 1.2e-13, int cells = 12,
                        double delta = 0.2) {
  return testing::sampled_scenario(testing::reference_system(), sigma2, delta, cells, rho_db, seed);
}

void check_design(const Scenario& sc, const DesignSolution& s) {
  const auto& sys = sc.system();
  REQUIRE(s.status != SolveStatus::infeasible);
  const RVec sd = sdr_values(sc, s.C, s.radar.pr, s.radar.filters);
  for (int k = 0; k < sc.cell_count(); ++k) CHECK(sd(k) >= sc.rho(k) * (1 - 1e-9));
  CHECK(s.radar.pr <= sys.pr_max * (1 + 1e-12));
  CHECK(s.radar.pr > 0);
  CHECK(s.C.trace().real() / sys.N <= sys.pc_max * (1 + 1e-9));
  Eigen::SelfAdjointEigenSolver<CMat> es(s.C);
  CHECK(es.eigenvalues().minCoeff() >= -1e-12 * std::max(1e-30, es.eigenvalues().maxCoeff()));
  CHECK(hermitian_defect(s.C) <= 1e-12 * s.C.cwiseAbs().maxCoeff());
}

}  // namespace

TEST_CASE("starting point is feasible", "[solver]") {
  for (std::uint64_t seed : {1u, 2u}) {
    const Scenario sc = reference_scenario(8.0, seed);
    const DesignPoint p = initial_point(sc);
    const RVec sd = sdr_values(sc, p.C, p.radar.pr, p.radar.filters);
    for (int k = 0; k < sc.cell_count(); ++k) CHECK(sd(k) >= sc.rho(k) * (1 - 1e-9));
    CHECK(p.radar.pr <= sc.system().pr_max);
    CHECK(p.C.trace().real() / sc.system().N <= sc.system().pc_max * (1 + 1e-12));
  }
}

TEST_CASE("block coordinate ascent is monotone, feasible and convergent", "[solver][property]") {
  for (double rho_db : {-5.0, 5.0, 9.0})
    for (std::uint64_t seed : {1u, 2u, 3u}) {
      const Scenario sc = reference_scenario(rho_db, seed);
      const DesignSolution s = block_coordinate_ascent(sc);
      CHECK(s.status == SolveStatus::converged);
      check_design(sc, s);
      REQUIRE(s.trace.size() == static_cast<std::size_t>(s.outer_iterations) + 1);
      for (std::size_t i = 1; i < s.trace.size(); ++i)
        CHECK(s.trace[i].ee >= s.trace[i - 1].ee * (1 - 1e-12));
      CHECK_THAT(s.ee, WithinRel(s.trace.back().ee, 1e-12));
      CHECK_THAT(s.ee, WithinRel(energy_efficiency(s.C, s.rate, sc.system()), 1e-12));
      CHECK_THAT(s.rate, WithinRel(rate(s.C, equivalent_channel(sc, s.radar.pr), sc.system()), 1e-9));
    }
}

TEST_CASE("strong interference near the ceiling stays feasible", "[solver]") {
  const Scenario sc = reference_scenario(9.1, 4, 1.2e-11, 30, 0.1);
  REQUIRE(check_feasibility(sc).feasible);
  const DesignSolution s = block_coordinate_ascent(sc);
  CHECK(s.status == SolveStatus::converged);
  check_design(sc, s);
}

TEST_CASE("targets above the ceiling report infeasible", "[solver]") {
  const Scenario sc = reference_scenario(9.5, 1);
  CHECK_FALSE(check_feasibility(sc).feasible);
  const DesignSolution s = block_coordinate_ascent(sc);
  CHECK(s.status == SolveStatus::infeasible);
}

TEST_CASE("outer iteration cap is honoured", "[solver]") {
  const Scenario sc = reference_scenario(5.0, 2);
  SolverOptions o;
  o.max_outer_iterations = 1;
  o.outer_tolerance = 1e-300;
  const DesignSolution s = block_coordinate_ascent(sc, o);
  CHECK(s.outer_iterations == 1);
  CHECK(s.status == SolveStatus::max_iterations);
  check_design(sc, s);
}

TEST_CASE("EE decreases as the SDR target tightens", "[solver][property]") {
  for (std::uint64_t seed : {5u, 6u}) {
    const Scenario sc = reference_scenario(0.0, seed);
    double prev = std::numeric_limits<double>::infinity();
    for (double rho_db : {-10.0, 0.0, 5.0, 9.0}) {
      const DesignSolution s = block_coordinate_ascent(sc.with_rho(db_to_linear(rho_db)));
      CHECK(s.ee <= prev * (1 + 1e-6));
      prev = s.ee;
    }
  }
}

TEST_CASE("without interference the joint design reaches the isolated bound", "[solver][baselines]") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const Scenario sc = reference_scenario(5.0, seed, 0.0, 12, 0.0);
    const DesignSolution s = block_coordinate_ascent(sc);
    const BaselineResult ni = non_interfering_design(sc);
    CHECK_THAT(s.ee, WithinRel(ni.ee, 1e-6));
  }
}

TEST_CASE("projected-gradient inner solver gives the same design", "[solver]") {
  const Scenario sc = reference_scenario(5.0, 7);
  SolverOptions pg;
  pg.dinkelbach.dual.method = DualMethod::projected_gradient;
  pg.dinkelbach.dual.schedule = StepSchedule::armijo;
  pg.dinkelbach.dual.max_iterations = 5000;
  const DesignSolution a = block_coordinate_ascent(sc, pg);
  const DesignSolution b = block_coordinate_ascent(sc);
  check_design(sc, a);
  CHECK_THAT(a.ee, WithinRel(b.ee, 1e-3));
}
