#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <memory>
#include <mutex>
#include <numbers>
#include <variant>
#include <vector>

#include <boost/numeric/odeint.hpp>

#include "rumorbd/error.hpp"
#include "rumorbd/growth.hpp"
#include "rumorbd/numeric.hpp"

namespace rumorbd {

struct ConstantMu {
  double mu = 1.0;
};

/// mu(t) = mu + alpha cos(2 pi t / Q), mu > |alpha| > 0.
struct CosineMu {
  double mu = 1.0;
  double alpha = 0.5;
  double Q = 1.0;
};

/// mu(t) induced by a growth curve; lambda = curve.rho * mu.
struct CurveInduced {
  growth::GrowthCurve curve;
};

using MuBase = std::variant<ConstantMu, CosineMu, CurveInduced>;

struct Constant {
  double lambda = 1.0;
  double mu = 1.0;
};

struct Proportional {
  double rho = 1.0;
  MuBase base = ConstantMu{};
};

/// Arbitrary intensities. sup_total(t0, t1) must bound lambda + mu on [t0, t1].
struct Explicit {
  std::function<double(double)> lambda_fn;
  std::function<double(double)> mu_fn;
  std::function<double(double, double)> sup_total;
};

enum class IntegralMethod { analytic, adaptive_quadrature };

/// Integral transforms at a time t.
///   L = int (lambda - mu), M = int mu, phi_x = int lambda / eta, phi_y = int lambda eta,
///   A = int mu eta, B = int mu eta phi_x, C = int mu eta B, with eta = e^L.
struct Transforms {
  double L = 0.0;
  double M = 0.0;
  double phi_x = 0.0;
  double phi_y = 0.0;
  double A = 0.0;
  double B = 0.0;
  double C = 0.0;

  double eta() const { return std::exp(L); }
  /// int mu eta (2 phi_x + j - 1)
  double gamma(double j) const { return 2.0 * B + (j - 1.0) * A; }
};

namespace detail {

/// Transforms for lambda = rho mu in terms of M alone.
inline Transforms proportional_transforms(double rho, double big_m) {
  const double x = (rho - 1.0) * big_m;
  Transforms tr;
  tr.L = x;
  tr.M = big_m;
  tr.phi_x = rho * big_m * numeric::one_minus_exp_neg_over(x);
  tr.A = big_m * numeric::expm1_over(x);
  tr.phi_y = rho * tr.A;
  tr.B = rho * big_m * big_m * numeric::expm1_minus_x_over_sq(x);
  tr.C = rho * big_m * big_m * big_m * numeric::half_expm1_2x_minus_x_exp_over_cube(x);
  return tr;
}

/// Memoized sweep of the transform ODE system with fixed checkpoint spacing.
/// A query at t integrates from the checkpoint floor(t / h), so the result does not
/// depend on query history.
class IntegralCache {
 public:
  using State = std::array<double, 7>;

  IntegralCache(std::function<double(double)> lambda, std::function<double(double)> mu, double abs_tol,
                double rel_tol, double spacing = 0.25)
      : lambda_(std::move(lambda)), mu_(std::move(mu)), abs_tol_(abs_tol), rel_tol_(rel_tol), h_(spacing) {
    checkpoints_.push_back(State{});
  }

  Transforms at(double t) const {
    if (!(t >= 0.0) || !std::isfinite(t)) throw DomainError("transforms: t must be finite and nonnegative");
    if (t == 0.0) return {};
    const auto k = static_cast<std::size_t>(std::floor(t / h_));
    State start;
    {
      std::lock_guard<std::mutex> lock(mutex_);
      while (checkpoints_.size() <= k) {
        const std::size_t i = checkpoints_.size() - 1;
        State next = checkpoints_.back();
        sweep(next, static_cast<double>(i) * h_, static_cast<double>(i + 1) * h_);
        checkpoints_.push_back(next);
      }
      start = checkpoints_[k];
    }
    const double t0 = static_cast<double>(k) * h_;
    if (t > t0) sweep(start, t0, t);
    Transforms tr;
    tr.L = start[0];
    tr.M = start[1];
    tr.phi_x = start[2];
    tr.phi_y = start[3];
    tr.A = start[4];
    tr.B = start[5];
    tr.C = start[6];
    return tr;
  }

 private:
  void sweep(State& y, double t0, double t1) const {
    namespace odeint = boost::numeric::odeint;
    auto rhs = [this](const State& s, State& d, double t) {
      const double l = lambda_(t);
      const double m = mu_(t);
      const double eta = std::exp(s[0]);
      d[0] = l - m;
      d[1] = m;
      d[2] = l / eta;
      d[3] = l * eta;
      d[4] = m * eta;
      d[5] = m * eta * s[2];
      d[6] = m * eta * s[5];
    };
    auto stepper = odeint::make_controlled(abs_tol_, rel_tol_, odeint::runge_kutta_dopri5<State>());
    double t = t0;
    double dt = std::min(0.05, t1 - t0);
    long attempts = 0;
    while (true) {
      const double rem = t1 - t;
      if (rem <= 1e-15 * std::max(1.0, t1)) break;
      dt = std::min(dt, rem);
      if (++attempts > 1'000'000) throw IntegrationError("transforms: step budget exhausted", dt);
      if (stepper.try_step(rhs, y, t, dt) == odeint::fail && dt < 1e-12 * std::max(1.0, t)) {
        throw IntegrationError("transforms: step size underflow in the integral sweep", dt);
      }
    }
  }

  std::function<double(double)> lambda_;
  std::function<double(double)> mu_;
  double abs_tol_;
  double rel_tol_;
  double h_;
  mutable std::mutex mutex_;
  mutable std::vector<State> checkpoints_;
};

}  // namespace detail

/// Per-capita intensities lambda(t), mu(t) with their integral transforms.
/// Immutable after construction; all queries are thread-safe.
class RateFamily {
 public:
  using Kind = std::variant<Constant, Proportional, Explicit>;

  explicit RateFamily(Kind kind, IntegralMethod method = IntegralMethod::analytic, double abs_tol = 1e-20,
                      double rel_tol = 1e-12)
      : kind_(std::move(kind)), method_(method) {
    validate();
    if (std::holds_alternative<Explicit>(kind_)) method_ = IntegralMethod::adaptive_quadrature;
    if (method_ == IntegralMethod::adaptive_quadrature) {
      cache_ = std::make_shared<detail::IntegralCache>([k = kind_](double t) { return lambda_of(k, t); },
                                                       [k = kind_](double t) { return mu_of(k, t); }, abs_tol,
                                                       rel_tol);
    }
  }

  static RateFamily constant(double lambda, double mu) { return RateFamily(Constant{lambda, mu}); }
  static RateFamily proportional(double rho, MuBase base, IntegralMethod method = IntegralMethod::analytic) {
    return RateFamily(Proportional{rho, std::move(base)}, method);
  }
  static RateFamily from_curve(const growth::GrowthCurve& curve) {
    return proportional(curve.rho, CurveInduced{curve});
  }

  const Kind& kind() const { return kind_; }
  IntegralMethod method() const { return method_; }
  bool is_constant() const { return std::holds_alternative<Constant>(kind_); }
  bool is_proportional() const { return std::holds_alternative<Proportional>(kind_); }

  double mu(double t) const { return mu_of(kind_, t); }
  double lambda(double t) const { return lambda_of(kind_, t); }

  /// Upper bound of lambda + mu on [t0, t1].
  double sup_total(double t0, double t1) const {
    if (const auto* c = std::get_if<Constant>(&kind_)) return c->lambda + c->mu;
    if (const auto* p = std::get_if<Proportional>(&kind_)) {
      const double f = 1.0 + p->rho;
      if (const auto* cm = std::get_if<ConstantMu>(&p->base)) return f * cm->mu;
      if (const auto* cs = std::get_if<CosineMu>(&p->base)) return f * (cs->mu + std::abs(cs->alpha));
      // Curve-induced: dense sampling with a safety margin. The simulator re-checks
      // every candidate against the bound and shrinks the window if it is violated.
      double best = 0.0;
      const int n = 64;
      for (int i = 0; i <= n; ++i) {
        best = std::max(best, mu(t0 + (t1 - t0) * i / n));
      }
      return f * best * 1.1 + 1e-12;
    }
    return std::get<Explicit>(kind_).sup_total(t0, t1);
  }

  /// Integral transforms at t (analytic where available).
  Transforms transforms(double t) const {
    if (!(t >= 0.0)) throw DomainError("rates: t must be nonnegative");
    if (cache_) return cache_->at(t);
    if (const auto* c = std::get_if<Constant>(&kind_)) {
      return detail::proportional_transforms(c->lambda / c->mu, c->mu * t);
    }
    const auto& p = std::get<Proportional>(kind_);
    return detail::proportional_transforms(p.rho, analytic_big_m(p.base, t));
  }

 private:
  static double mu_of(const Kind& k, double t) {
    if (const auto* c = std::get_if<Constant>(&k)) return c->mu;
    if (const auto* p = std::get_if<Proportional>(&k)) return base_mu(p->base, t);
    return std::get<Explicit>(k).mu_fn(t);
  }

  static double lambda_of(const Kind& k, double t) {
    if (const auto* c = std::get_if<Constant>(&k)) return c->lambda;
    if (const auto* p = std::get_if<Proportional>(&k)) return p->rho * base_mu(p->base, t);
    return std::get<Explicit>(k).lambda_fn(t);
  }

  static double base_mu(const MuBase& b, double t) {
    if (const auto* c = std::get_if<ConstantMu>(&b)) return c->mu;
    if (const auto* c = std::get_if<CosineMu>(&b)) {
      return c->mu + c->alpha * std::cos(2.0 * std::numbers::pi * t / c->Q);
    }
    return growth::induced_mu(std::get<CurveInduced>(b).curve, t);
  }

  static double analytic_big_m(const MuBase& b, double t) {
    if (const auto* c = std::get_if<ConstantMu>(&b)) return c->mu * t;
    if (const auto* c = std::get_if<CosineMu>(&b)) {
      return c->mu * t + c->alpha * c->Q / (2.0 * std::numbers::pi) * std::sin(2.0 * std::numbers::pi * t / c->Q);
    }
    return growth::induced_m(std::get<CurveInduced>(b).curve, t);
  }

  void validate() const {
    auto pos = [](double v) { return v > 0.0 && std::isfinite(v); };
    if (const auto* c = std::get_if<Constant>(&kind_)) {
      if (!pos(c->lambda) || !pos(c->mu)) throw DomainError("rates: lambda and mu must be positive");
      return;
    }
    if (const auto* p = std::get_if<Proportional>(&kind_)) {
      if (!pos(p->rho)) throw DomainError("rates: rho must be positive");
      if (const auto* c = std::get_if<ConstantMu>(&p->base)) {
        if (!pos(c->mu)) throw DomainError("rates: mu must be positive");
      } else if (const auto* c = std::get_if<CosineMu>(&p->base)) {
        if (!(c->mu > std::abs(c->alpha) && std::abs(c->alpha) > 0.0) || !pos(c->Q)) {
          throw DomainError("rates: cosine base requires mu > |alpha| > 0 and Q > 0");
        }
      } else {
        const auto& curve = std::get<CurveInduced>(p->base).curve;
        growth::validate(curve);
        if (curve.rho != p->rho) throw DomainError("rates: curve-induced base needs rho equal to the curve's rho");
        if (!growth::is_nondecreasing(curve, 100.0, 10000)) {
          throw DomainError("rates: curve-induced base needs a nondecreasing curve (mu would turn negative)");
        }
      }
      return;
    }
    const auto& e = std::get<Explicit>(kind_);
    if (!e.lambda_fn || !e.mu_fn || !e.sup_total) {
      throw DomainError("rates: explicit family needs lambda, mu and sup_total callables");
    }
    for (int i = 0; i <= 200; ++i) {
      const double t = 0.05 * i;
      if (!(e.lambda_fn(t) > 0.0) || !(e.mu_fn(t) > 0.0)) {
        throw DomainError("rates: explicit intensities must be positive");
      }
    }
  }

  Kind kind_;
  IntegralMethod method_;
  std::shared_ptr<detail::IntegralCache> cache_;
};

inline double eta(const RateFamily& r, double t) { return r.transforms(t).eta(); }
inline double big_m(const RateFamily& r, double t) { return r.transforms(t).M; }
inline double phi_x(const RateFamily& r, double t) { return r.transforms(t).phi_x; }
inline double phi_y(const RateFamily& r, double t) { return r.transforms(t).phi_y; }
inline double gamma(const RateFamily& r, int j, double t) {
  if (j < 1) throw DomainError("gamma: j must be >= 1");
  return r.transforms(t).gamma(static_cast<double>(j));
}

}  // namespace rumorbd
