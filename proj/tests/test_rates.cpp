#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>
#include <thread>

#include "random_curves.hpp"
#include "rumorbd/rates.hpp"

using namespace rumorbd;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

bool close_rel(double a, double b, double tol) { return std::abs(a - b) <= tol * std::max(std::abs(a), std::abs(b)); }

void check_transforms_close(const Transforms& a, const Transforms& b, double tol) {
  CHECK(close_rel(a.L, b.L, tol));
  CHECK(close_rel(a.M, b.M, tol));
  CHECK(close_rel(a.phi_x, b.phi_x, tol));
  CHECK(close_rel(a.phi_y, b.phi_y, tol));
  CHECK(close_rel(a.A, b.A, tol));
  CHECK(close_rel(a.B, b.B, tol));
  CHECK(close_rel(a.C, b.C, tol));
}

}  // namespace

TEST_CASE("eta examples") {
  CHECK(eta(RateFamily::constant(1, 1), 5.0) == 1.0);
  CHECK_THAT(eta(RateFamily::constant(2, 1), 1.0), WithinRel(std::exp(1.0), 1e-15));
  const auto cos = RateFamily::proportional(2.0, CosineMu{1.0, 0.5, 2.5});
  CHECK_THAT(eta(cos, 2.5), WithinRel(std::exp(2.5), 1e-14));
  CHECK_THAT(eta(cos, 2.5), WithinAbs(12.18249, 1e-5));
}

TEST_CASE("big M examples") {
  CHECK_THAT(big_m(RateFamily::proportional(1.3, ConstantMu{1.0}), 3.0), WithinAbs(3.0, 1e-15));
  const auto cos = RateFamily::proportional(1.0, CosineMu{1.0, 0.5, 2.5});
  const double expect = 1.0 + 0.5 * 2.5 / (2.0 * std::numbers::pi) * std::sin(2.0 * std::numbers::pi / 2.5);
  CHECK_THAT(big_m(cos, 1.0), WithinRel(expect, 1e-15));
  CHECK_THAT(big_m(cos, 1.0), WithinAbs(1.11694, 1e-5));
  const auto gomp = RateFamily::from_curve({growth::Gompertz{3.0, 2.0}, 1.0, 1.5});
  CHECK_THAT(big_m(gomp, 1.0), WithinRel(6.0 * (1.0 - std::exp(-2.0)), 1e-14));
  CHECK_THAT(big_m(gomp, 1.0), WithinAbs(5.18798, 1e-5));
}

TEST_CASE("phi and gamma examples") {
  CHECK_THAT(phi_x(RateFamily::constant(1, 1), 2.0), WithinAbs(2.0, 1e-15));
  CHECK_THAT(phi_y(RateFamily::constant(2, 1), 1.0), WithinRel(2.0 * (std::exp(1.0) - 1.0), 1e-15));
  const auto c = RateFamily::constant(1, 1);
  CHECK_THAT(gamma(c, 1, 1.0), WithinAbs(1.0, 1e-15));
  // r = gamma / m_Y = 1 + (mu t - 1) / j
  CHECK_THAT(gamma(c, 1, 1.0) / c.transforms(1.0).A, WithinAbs(1.0, 1e-15));
  CHECK_THAT(gamma(c, 3, 2.0) / (3.0 * c.transforms(2.0).A), WithinAbs(1.0 + 1.0 / 3.0, 1e-14));
  CHECK_THROWS_AS(gamma(c, 0, 1.0), DomainError);
}

TEST_CASE("transforms vanish at zero and are nondecreasing") {
  const RateFamily fams[] = {
      RateFamily::constant(0.7, 1.9),
      RateFamily::proportional(1.5, CosineMu{1.0, 0.9, 1.3}),
      RateFamily::proportional(0.5, CosineMu{1.0, 0.5, 2.5}, IntegralMethod::adaptive_quadrature),
      RateFamily::from_curve({growth::Logistic{30.0, 1.0}, 2.0, 1.8}),
  };
  for (const auto& r : fams) {
    const auto z = r.transforms(0.0);
    CHECK(z.M == 0.0);
    CHECK(z.phi_x == 0.0);
    CHECK(z.phi_y == 0.0);
    CHECK(z.gamma(2.0) == 0.0);
    Transforms prev = z;
    for (int i = 1; i <= 400; ++i) {
      const auto tr = r.transforms(0.025 * i);
      CHECK(tr.M >= prev.M);
      CHECK(tr.phi_x >= prev.phi_x);
      CHECK(tr.phi_y >= prev.phi_y);
      CHECK(tr.gamma(2.0) >= prev.gamma(2.0));
      CHECK_THAT(tr.eta() * std::exp(-tr.L), WithinAbs(1.0, 1e-15));
      prev = tr;
    }
  }
}

TEST_CASE("analytic paths agree with quadrature") {
  std::mt19937_64 rng(17);
  auto u = [&](double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); };
  for (int i = 0; i < 40; ++i) {
    const double lambda = u(0.1, 5.0);
    const double mu = u(0.1, 5.0);
    const double rho = u(0.1, 5.0);
    const double m0 = u(0.2, 5.0);
    const double alpha = u(0.05, 0.95) * m0;
    const double q = u(0.1, 5.0);
    const RateFamily pairs[][2] = {
        {RateFamily::constant(lambda, mu), RateFamily(Constant{lambda, mu}, IntegralMethod::adaptive_quadrature)},
        {RateFamily::proportional(rho, ConstantMu{mu}),
         RateFamily::proportional(rho, ConstantMu{mu}, IntegralMethod::adaptive_quadrature)},
        {RateFamily::proportional(rho, CosineMu{m0, alpha, q}),
         RateFamily::proportional(rho, CosineMu{m0, alpha, q}, IntegralMethod::adaptive_quadrature)},
    };
    for (const auto& pr : pairs) {
      for (double t : {0.1, 0.77, 2.0, 3.3}) {
        check_transforms_close(pr[0].transforms(t), pr[1].transforms(t), 1e-8);
      }
    }
  }
  std::mt19937_64 crng(23);
  for (int f = 0; f < testing_support::kFamilyCount; ++f) {
    for (int draw = 0; draw < 3; ++draw) {
      auto c = testing_support::random_curve(f, crng);
      if (c.rho == 1.0) continue;
      const auto a = RateFamily::from_curve(c);
      const auto b = RateFamily::proportional(c.rho, CurveInduced{c}, IntegralMethod::adaptive_quadrature);
      for (double t : {0.5, 1.5, 4.0}) {
        INFO(growth::family_name(c) << " t=" << t);
        check_transforms_close(a.transforms(t), b.transforms(t), 1e-8);
      }
    }
  }
}

TEST_CASE("quadrature cache is reproducible and thread safe") {
  const auto r = RateFamily::proportional(1.5, CosineMu{1.0, 0.5, 2.5}, IntegralMethod::adaptive_quadrature);
  const double late = r.transforms(7.3).C;
  const double early = r.transforms(1.1).C;
  CHECK(r.transforms(7.3).C == late);
  CHECK(r.transforms(1.1).C == early);
  // a fresh family queried in a different order gives bit-identical values
  const auto fresh = RateFamily::proportional(1.5, CosineMu{1.0, 0.5, 2.5}, IntegralMethod::adaptive_quadrature);
  CHECK(fresh.transforms(1.1).C == early);
  CHECK(fresh.transforms(7.3).C == late);

  const auto shared = RateFamily::proportional(0.8, CosineMu{2.0, 1.0, 3.0}, IntegralMethod::adaptive_quadrature);
  std::vector<double> out(8);
  std::vector<std::thread> pool;
  for (int w = 0; w < 8; ++w) {
    pool.emplace_back([&, w] { out[w] = shared.transforms(5.0 + 0.0 * w).B; });
  }
  for (auto& th : pool) th.join();
  for (double v : out) CHECK(v == out[0]);
}

TEST_CASE("explicit families use quadrature") {
  Explicit e;
  e.lambda_fn = [](double t) { return 1.0 + 0.5 * std::sin(t); };
  e.mu_fn = [](double) { return 1.0; };
  e.sup_total = [](double, double) { return 2.5; };
  const RateFamily r{e};
  CHECK(r.method() == IntegralMethod::adaptive_quadrature);
  // L = 0.5 (1 - cos t)
  CHECK_THAT(r.transforms(2.0).L, WithinRel(0.5 * (1.0 - std::cos(2.0)), 1e-11));
  CHECK_THAT(r.transforms(2.0).M, WithinRel(2.0, 1e-12));

  Explicit flat;
  flat.lambda_fn = [](double) { return 2.0; };
  flat.mu_fn = [](double) { return 1.0; };
  flat.sup_total = [](double, double) { return 3.0; };
  check_transforms_close(RateFamily{flat}.transforms(2.2), RateFamily::constant(2, 1).transforms(2.2), 1e-10);
}

TEST_CASE("sup bound dominates lambda + mu") {
  const RateFamily fams[] = {
      RateFamily::constant(0.7, 1.9),
      RateFamily::proportional(1.5, CosineMu{1.0, 0.9, 1.3}),
      RateFamily::from_curve({growth::Gompertz{3.0, 2.0}, 1.0, 1.5}),
      RateFamily::from_curve({growth::Mitscherlich{1.0, 2.0}, 1.0, 0.6}),
  };
  for (const auto& r : fams) {
    for (double t0 : {0.0, 0.3, 2.0}) {
      const double b = r.sup_total(t0, t0 + 0.5);
      for (int i = 0; i <= 100; ++i) {
        const double t = t0 + 0.005 * i;
        CHECK(r.lambda(t) + r.mu(t) <= b);
      }
    }
  }
}

TEST_CASE("proportional intensities keep their ratio") {
  const auto r = RateFamily::proportional(2.7, CosineMu{1.0, 0.3, 0.9});
  for (double t : {0.0, 0.4, 3.1}) CHECK(r.lambda(t) == 2.7 * r.mu(t));
}

TEST_CASE("invalid rate families are rejected") {
  CHECK_THROWS_AS(RateFamily::constant(0, 1), DomainError);
  CHECK_THROWS_AS(RateFamily::constant(1, -1), DomainError);
  CHECK_THROWS_AS(RateFamily::proportional(-1.0, ConstantMu{1.0}), DomainError);
  CHECK_THROWS_AS(RateFamily::proportional(1.0, CosineMu{1.0, 1.0, 2.0}), DomainError);
  CHECK_THROWS_AS(RateFamily::proportional(1.0, CosineMu{1.0, 0.0, 2.0}), DomainError);
  growth::GrowthCurve c{growth::Gompertz{1.0, 1.0}, 1.0, 1.5};
  CHECK_THROWS_AS(RateFamily::proportional(2.0, CurveInduced{c}), DomainError);
  growth::GrowthCurve bumpy{growth::MultisigLogistic{40.0, {-1.0, 0.0, 0.5, -0.01}}, 1.0, 2.0};
  CHECK_THROWS_AS(RateFamily::from_curve(bumpy), DomainError);
  Explicit neg;
  neg.lambda_fn = [](double t) { return 1.0 - t; };
  neg.mu_fn = [](double) { return 1.0; };
  neg.sup_total = [](double, double) { return 2.0; };
  CHECK_THROWS_AS(RateFamily{neg}, DomainError);
  CHECK_THROWS_AS(RateFamily::constant(1, 1).transforms(-1.0), DomainError);
}

TEST_CASE("a non-integrable intensity raises an integration error") {
  Explicit e;
  e.lambda_fn = [](double t) { return 1.0 / std::abs(1.0 - t) + 1e-3; };
  e.mu_fn = [](double) { return 1.0; };
  e.sup_total = [](double, double) { return numeric::kInf; };
  const RateFamily r{e};
  CHECK_THROWS_AS(r.transforms(1.2), IntegrationError);
}
