#include <catch_amalgamated.hpp>

#include <cmath>

#include "rumorbd/homogeneous.hpp"
#include "rumorbd/moments.hpp"
#include "rumorbd/oracle.hpp"

using namespace rumorbd;
using Catch::Matchers::WithinAbs;

TEST_CASE("t = 0 grid is the initial condition") {
  const auto g = oracle::solve_forward(RateFamily::constant(1, 1), 1, 0.0, 10, 10);
  for (int n = 0; n <= 10; ++n) {
    for (int k = 0; k <= 10; ++k) CHECK(g.at(n, k) == (n == 1 && k == 0 ? 1.0 : 0.0));
  }
  const auto m = oracle::moments_from_grid(oracle::solve_forward(RateFamily::constant(2, 1), 3, 0.0, 12, 12));
  CHECK(m.m_x == 3.0);
  CHECK(m.m_y == 0.0);
  CHECK(m.var_x == 0.0);
  CHECK(m.var_y == 0.0);
  CHECK(m.cov == 0.0);
}

TEST_CASE("critical constant rates") {
  const auto r = RateFamily::constant(1, 1);
  const auto g = oracle::solve_forward(r, 1, 1.0, 80, 80);
  CHECK(g.leaked_mass <= 1e-8);
  CHECK_THAT(oracle::absorbed_mass(g), WithinAbs(0.5, 1e-6));
  const auto m = oracle::moments_from_grid(g);
  CHECK_THAT(m.m_x, WithinAbs(1.0, 1e-5));
  CHECK_THAT(m.m_y, WithinAbs(1.0, 1e-5));
  CHECK_THAT(g.at(0, 1), WithinAbs(homogeneous::p01(1, 1, 1.0), 1e-6));
}

TEST_CASE("p02 settles at one eighth") {
  // any path into (0, 2) stays inside n, k <= 2, so a small box is exact there
  oracle::StepControl ctl;
  ctl.leak_tolerance = 1.0;
  const auto g = oracle::solve_forward(RateFamily::constant(1, 1), 1, 200.0, 8, 8, ctl);
  CHECK_THAT(g.at(0, 2), WithinAbs(0.125, 1e-6));
  CHECK_THAT(g.at(0, 2), WithinAbs(homogeneous::p0k_limit(1, 1, 1, 2), 1e-6));
}

TEST_CASE("p01 matches the closed form") {
  for (auto [l, m] : {std::pair{1.0, 2.0}, {2.0, 0.5}, {0.7, 0.7}}) {
    for (double t : {0.3, 1.0, 2.5}) {
      const auto g = oracle::solve_forward(RateFamily::constant(l, m), 1, t, 8, 8, {0.01, 0.1, 1.0});
      CHECK_THAT(g.at(0, 1), WithinAbs(homogeneous::p01(l, m, t), 1e-6));
    }
  }
}

TEST_CASE("grid moments agree with the closed forms") {
  const auto r = RateFamily::constant(1, 2);
  for (double t : {0.5, 1.0, 2.0}) {
    const auto g = oracle::solve_forward(r, 2, t, 60, 60);
    REQUIRE(g.leaked_mass <= 1e-8);
    const auto om = oracle::moments_from_grid(g);
    const auto cf = moment_report(r, 2, t);
    CHECK_THAT(om.m_x, WithinAbs(cf.m_x, 1e-5));
    CHECK_THAT(om.m_y, WithinAbs(cf.m_y, 1e-5));
    CHECK_THAT(om.var_x, WithinAbs(cf.var_x, 1e-5));
    CHECK_THAT(om.m2_y, WithinAbs(cf.m2_y, 1e-5));
    CHECK_THAT(om.m_xy, WithinAbs(cf.m_xy, 1e-5));
    CHECK_THAT(om.cov, WithinAbs(cf.cov, 1e-5));
  }
  const auto cos = RateFamily::proportional(0.9, CosineMu{1.0, 0.5, 2.0});
  for (double t : {0.7, 2.0}) {
    const auto g = oracle::solve_forward(cos, 2, t, 60, 60);
    REQUIRE(g.leaked_mass <= 1e-8);
    const auto om = oracle::moments_from_grid(g);
    const auto cf = moment_report(cos, 2, t);
    CHECK_THAT(om.m_x, WithinAbs(cf.m_x, 1e-5));
    CHECK_THAT(om.var_y, WithinAbs(cf.var_y, 1e-5));
    CHECK_THAT(om.cov, WithinAbs(cf.cov, 1e-5));
  }
}

TEST_CASE("probability is conserved and stays on the state space") {
  const auto r = RateFamily::proportional(1.2, CosineMu{1.0, 0.6, 1.5});
  const double t = 2.0;
  const auto g = oracle::solve_forward(r, 3, t, 90, 90);
  CHECK(std::abs(g.total_mass() + g.leaked_mass - 1.0) <= 1e-8 * t);
  for (int n = 0; n <= g.n_max; ++n) {
    for (int k = 0; k <= g.k_max; ++k) {
      CHECK(g.at(n, k) >= 0.0);
      if (k < std::max(0, 3 - n)) CHECK(g.at(n, k) == 0.0);
    }
  }
}

TEST_CASE("leakage is reported") {
  const auto r = RateFamily::constant(3.0, 0.5);
  CHECK_THROWS_AS(oracle::solve_forward(r, 1, 4.0, 10, 10), TruncationError);
  oracle::StepControl loose;
  loose.leak_tolerance = 1.0;
  const auto g = oracle::solve_forward(r, 1, 1.0, 10, 10, loose);
  CHECK(g.leaked_mass > 1e-6);
  CHECK_THROWS_AS(oracle::moments_from_grid(g), TruncationError);
}

TEST_CASE("invalid oracle requests") {
  const auto r = RateFamily::constant(1, 1);
  CHECK_THROWS_AS(oracle::solve_forward(r, 0, 1.0, 10, 10), DomainError);
  CHECK_THROWS_AS(oracle::solve_forward(r, 1, -1.0, 10, 10), DomainError);
  CHECK_THROWS_AS(oracle::solve_forward(r, 3, 1.0, 7, 20), DomainError);
}
