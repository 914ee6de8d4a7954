#include <catch_amalgamated.hpp>

#include <set>

#include "test_helpers.hpp"

using namespace coexist;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinRel;

TEST_CASE("reference configuration file loads with the stated parameters", "[scenario][config]") {
  const Config c = load_config(COEXIST_SOURCE_DIR "/configs/reference.json");
  CHECK(c.system.N == 100);
  CHECK(c.system.L() == 5);
  CHECK(c.system.J == 3);
  CHECK(c.system.M == 2);
  CHECK(c.system.K == 2);
  CHECK(c.system.pr_max == 25.0);
  CHECK(c.system.pc_max == 0.01);
  CHECK(c.system.eta == 0.85);
  CHECK(c.system.omega == 0.01);
  CHECK_THAT(c.system.code.squaredNorm(), WithinRel(100.0, 1e-12));
}

TEST_CASE("code length must be strictly between 0 and N", "[scenario][config]") {
  json doc = {{"system", {{"N", 5}, {"code_q", {1, 1, 1, -1, 1}}}}};
  CHECK_THROWS_WITH(parse_config(doc), ContainsSubstring("L must satisfy 0<L<N"));
  SystemParams s;
  s.N = 5;
  s.code = CVec::Ones(5);
  CHECK_THROWS_AS(validate(s), ConfigError);
}

TEST_CASE("unnormalized Barker code is rescaled to energy N", "[scenario][config]") {
  SystemParams s = testing::reference_system();
  for (int i = 0; i < 5; ++i) {
    const double expected = (i == 3 ? -1.0 : 1.0) * std::sqrt(20.0);
    CHECK_THAT(s.code(i).real(), WithinRel(expected, 1e-12));
    CHECK(s.code(i).imag() == 0.0);
  }
}

TEST_CASE("invalid configuration values name the offending field", "[scenario][config]") {
  CHECK_THROWS_WITH(parse_config(json{{"system", {{"eta", 1.5}}}}), ContainsSubstring("eta"));
  CHECK_THROWS_WITH(parse_config(json{{"system", {{"Pv", 0.0}}}}), ContainsSubstring("Pv"));
  CHECK_THROWS_WITH(parse_config(json{{"sweep", {{"delta", {1.5}}}}}), ContainsSubstring("delta"));
  CHECK_THROWS_WITH(parse_config(json{{"montecarlo", {{"runs", 0}}}}), ContainsSubstring("runs"));
  CHECK_THROWS_WITH(parse_config(json{{"solver", {{"dual", {{"method", "newton"}}}}}}),
                    ContainsSubstring("method"));
  CHECK_THROWS_AS(parse_config(json::array()), ConfigError);
}

TEST_CASE("statistics validation rejects bad cells, variances and covariances", "[scenario]") {
  const SystemParams sys = testing::small_system();
  StatisticsParams st;
  st.sigma2_gamma = RMat::Constant(sys.N, sys.J, 1e-17);
  CHECK_THROWS_AS(validate(sys, st), ConfigError);  // no protected cells

  set_protected_cells(st, {{0, 0}}, 1e-16, 2.0);
  CHECK_NOTHROW(validate(sys, st));

  auto bad = st;
  set_protected_cells(bad, {{sys.N - sys.L() + 1, 0}}, 1e-16, 2.0);
  CHECK_THROWS_WITH(validate(sys, bad), ContainsSubstring("outside"));

  bad = st;
  bad.rho[{0, 0}] = 0.0;
  CHECK_THROWS_AS(validate(sys, bad), ConfigError);

  bad = st;
  bad.sigma2_gamma(0, 0) = -1.0;
  CHECK_THROWS_WITH(validate(sys, bad), ContainsSubstring("sigma2_gamma"));

  bad = st;
  CMat not_psd(2, 2);
  not_psd << 1.0, 0.0, 0.0, -1.0;
  bad.alpha.push_back({3, not_psd});
  CHECK_THROWS_WITH(validate(sys, bad), ContainsSubstring("sigma2_alpha"));

  bad = st;
  CMat not_herm(2, 2);
  not_herm << 1.0, 0.5, 0.0, 1.0;
  bad.beta.push_back({3, 0, not_herm});
  CHECK_THROWS_WITH(validate(sys, bad), ContainsSubstring("sigma2_beta"));
}

TEST_CASE("zero density gives a non-interfering scenario", "[scenario][sampling]") {
  const SystemParams sys = testing::reference_system();
  const ScenarioSample s = sample_scenario(sys, 3e-10, 0.0, 7);
  CHECK(s.active_alpha_bins.empty());
  for (const auto& b : s.active_beta_bins) CHECK(b.empty());
  StatisticsParams st;
  apply_sample(sys, s, 1.2e-13, st);
  CHECK(st.alpha.empty());
  CHECK(st.beta.empty());
}

TEST_CASE("active bin count is floor(delta N)", "[scenario][sampling]") {
  const SystemParams sys = testing::reference_system();
  const ScenarioSample s = sample_scenario(sys, 3e-10, 0.3, 11);
  CHECK(s.active_alpha_bins.size() == 30);
  CHECK(std::set<int>(s.active_alpha_bins.begin(), s.active_alpha_bins.end()).size() == 30);
  for (const auto& b : s.active_beta_bins) CHECK(b.size() == 30);
  CHECK(active_bin_count(0.333, 100) == 33);
  CHECK(active_bin_count(0.1, 100) == 10);
  CHECK(active_bin_count(0.005, 100) == 0);

  StatisticsParams st;
  apply_sample(sys, s, 1.2e-13, st);
  CHECK(st.alpha.size() == 30);
  CHECK(st.beta.size() == 90);
  for (const auto& b : st.beta) {
    CHECK(b.cov(0, 1) == cd(0.0));
    CHECK(b.cov(0, 0) == cd(1.2e-13));
  }
}

TEST_CASE("sampling is deterministic in the seed", "[scenario][sampling]") {
  const SystemParams sys = testing::reference_system();
  const ScenarioSample a = sample_scenario(sys, 3e-10, 0.2, 42);
  const ScenarioSample b = sample_scenario(sys, 3e-10, 0.2, 42);
  const ScenarioSample c = sample_scenario(sys, 3e-10, 0.2, 43);
  CHECK(a.H == b.H);
  CHECK(a.active_alpha_bins == b.active_alpha_bins);
  CHECK(a.active_beta_bins == b.active_beta_bins);
  CHECK(a.nu0 == b.nu0);
  CHECK(a.H != c.H);
}

TEST_CASE("channel entries have the configured variance", "[scenario][sampling][property]") {
  const SystemParams sys = testing::reference_system();
  const double var = 3e-10;
  double acc = 0.0, acc_re = 0.0;
  int count = 0;
  for (std::uint64_t seed = 0; seed < 10000; ++seed) {
    const ScenarioSample s = sample_scenario(sys, var, 0.0, seed);
    for (Eigen::Index i = 0; i < s.H.size(); ++i) {
      acc += std::norm(s.H(i));
      acc_re += s.H(i).real() * s.H(i).real();
      ++count;
    }
  }
  CHECK_THAT(acc / count, WithinRel(var, 0.05));
  CHECK_THAT(acc_re / count, WithinRel(var / 2, 0.05));  // circular symmetry
}

TEST_CASE("mutual delay is spread over 0..N-1", "[scenario][sampling][property]") {
  const SystemParams sys = testing::small_system(10);
  std::vector<int> hits(10, 0);
  for (std::uint64_t seed = 0; seed < 5000; ++seed) {
    const int nu0 = sample_scenario(sys, 1.0, 0.5, seed).nu0;
    REQUIRE(nu0 >= 0);
    REQUIRE(nu0 < 10);
    ++hits[static_cast<std::size_t>(nu0)];
  }
  for (int h : hits) CHECK(h > 400);  // mean 500, sd ~21
}

TEST_CASE("protected cells are distinct admissible cells", "[scenario][sampling]") {
  const SystemParams sys = testing::reference_system();
  std::mt19937_64 rng(5);
  const auto cells = sample_protected_cells(sys, 30, rng);
  CHECK(cells.size() == 30);
  CHECK(std::set<Cell>(cells.begin(), cells.end()).size() == 30);
  for (const Cell& c : cells) {
    CHECK(c.range >= 0);
    CHECK(c.range <= sys.N - sys.L());
    CHECK(c.beam >= 0);
    CHECK(c.beam < sys.J);
  }
  CHECK_THROWS_AS(sample_protected_cells(sys, 0, rng), ConfigError);
}

TEST_CASE("explicit configuration entries override sampled ones", "[scenario][config]") {
  json doc = {{"system", {{"N", 12}, {"J", 2}, {"code_q", {1, 1, -1}}}},
              {"statistics",
               {{"protected_cells", {{0, 0}, {3, 1}}},
                {"nu0", 4},
                {"channel", {{{1, 0}, {0, 1}}, {{0.5, 0}, {0, 0}}}},
                {"sigma2_alpha", {{{"bin", 2}, {"value", 1e-13}}}},
                {"sigma2_beta", {{{"bin", 5}, {"beam", 1}, {"value", 2e-13}}}}}},
              {"sweep", {{"rho_db", {3.0}}, {"cells", 2}}}};
  const Config c = parse_config(doc);
  const Scenario sc = default_scenario(c);
  CHECK(sc.cell_count() == 2);
  CHECK(sc.cells()[1] == Cell{3, 1});
  CHECK(sc.statistics().nu0 == 4);
  CHECK(sc.channel()(0, 1) == cd(0.0, 1.0));
  REQUIRE(sc.statistics().alpha.size() == 1);
  CHECK(sc.statistics().alpha[0].bin == 2);
  REQUIRE(sc.statistics().beta.size() == 1);
  CHECK(sc.statistics().beta[0].cov(1, 1) == cd(2e-13));
  CHECK_THAT(sc.rho(0), WithinRel(db_to_linear(3.0), 1e-12));
}

TEST_CASE("config hash ignores formatting and key order", "[scenario][config]") {
  const Config a = parse_config(json::parse(R"({"system":{"N":100},"montecarlo":{"runs":3}})"));
  const Config b = parse_config(json::parse(R"({ "montecarlo" : {"runs": 3}, "system": {"N": 100} })"));
  const Config c = parse_config(json::parse(R"({"system":{"N":100},"montecarlo":{"runs":4}})"));
  CHECK(config_hash(a) == config_hash(b));
  CHECK(config_hash(a) != config_hash(c));
  CHECK(hex16(config_hash(a)).size() == 16);
}
