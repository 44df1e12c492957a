#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "rumorbd/error.hpp"
#include "rumorbd/homogeneous.hpp"
#include "rumorbd/numeric.hpp"
#include "rumorbd/proportional.hpp"
#include "rumorbd/rates.hpp"
#include "rumorbd/report.hpp"

// Conditional moments of (X(t), Y(t)) given (j, 0) for arbitrary rate families,
// assembled from the integral transforms of the rates.
namespace rumorbd {

namespace detail {

inline void check_jt(int j, double t) {
  if (j < 1) throw DomainError("moments: j must be >= 1");
  if (!(t >= 0.0)) throw DomainError("moments: t must be nonnegative");
}

inline double corr_limit_at_zero(const RateFamily& r) {
  const double l = r.lambda(0.0);
  const double m = r.mu(0.0);
  return -std::sqrt(m / (l + m));
}

}  // namespace detail

inline double mean_x(const RateFamily& r, int j, double t) {
  detail::check_jt(j, t);
  return j * eta(r, t);
}

inline double var_x(const RateFamily& r, int j, double t) {
  detail::check_jt(j, t);
  const auto tr = r.transforms(t);
  const double e = tr.eta();
  return j * (-e * std::expm1(tr.L) + 2.0 * e * e * tr.phi_x);
}

/// j (phi_Y - eta + 1), evaluated as j int mu eta.
inline double mean_y(const RateFamily& r, int j, double t) {
  detail::check_jt(j, t);
  return j * r.transforms(t).A;
}

/// E[Y^2] = int mu m_X (1 + 2 gamma).
inline double second_moment_y(const RateFamily& r, int j, double t) {
  detail::check_jt(j, t);
  const auto tr = r.transforms(t);
  return j * (tr.A + 4.0 * tr.C + (j - 1.0) * tr.A * tr.A);
}

/// E[XY] = m_X gamma.
inline double mixed_moment(const RateFamily& r, int j, double t) {
  detail::check_jt(j, t);
  const auto tr = r.transforms(t);
  return j * tr.eta() * tr.gamma(j);
}

/// E[XY] / (E[X] E[Y]) through gamma / m_Y; 1 - 1/j at t = 0.
inline double r_index(const RateFamily& r, int j, double t) {
  detail::check_jt(j, t);
  const auto tr = r.transforms(t);
  if (tr.A == 0.0) return 1.0 - 1.0 / j;
  return tr.gamma(j) / (j * tr.A);
}

/// Full report at t from one transform evaluation.
inline MomentReport moment_report(const RateFamily& r, int j, double t) {
  detail::check_jt(j, t);
  const auto tr = r.transforms(t);
  const double e = tr.eta();
  const double jd = j;
  MomentReport rep;
  rep.t = t;
  rep.j = jd;
  rep.m_x = jd * e;
  rep.var_x = jd * (-e * std::expm1(tr.L) + 2.0 * e * e * tr.phi_x);
  rep.m_y = jd * tr.A;
  rep.m2_y = jd * (tr.A + 4.0 * tr.C + (jd - 1.0) * tr.A * tr.A);
  const double g = tr.gamma(jd);
  rep.m_xy = rep.m_x * g;
  rep.r_index = tr.A == 0.0 ? 1.0 - 1.0 / jd : g / (jd * tr.A);
  rep.log_m_x = std::log(jd) + tr.L;
  rep.log_m_y = std::log(rep.m_y);
  detail::complete_report(rep, detail::corr_limit_at_zero(r));
  return rep;
}

inline std::vector<MomentReport> moment_grid(const RateFamily& r, int j, const std::vector<double>& times) {
  std::vector<MomentReport> out;
  out.reserve(times.size());
  for (double t : times) out.push_back(moment_report(r, j, t));
  return out;
}

struct CovCorr {
  double cov = 0.0;
  double corr = 0.0;
  /// corr is the t -> 0+ limit, both variances being zero.
  bool degenerate = false;
};

inline CovCorr cov_corr(const RateFamily& r, int j, double t) {
  const auto rep = moment_report(r, j, t);
  return {rep.cov, rep.corr, rep.corr_is_limit};
}

struct FanoCv {
  double fano_x = 0.0;
  double cv_x = 0.0;
  double fano_y = 0.0;
  double cv_y = 0.0;
};

inline FanoCv fano_cv(const RateFamily& r, int j, double t) {
  const auto rep = moment_report(r, j, t);
  return {rep.fano_x, rep.cv_x, rep.fano_y, rep.cv_y};
}

/// P(X(t) = 0 | j). Closed forms for constant and proportional rates; otherwise
/// (1 - 1/D)^j with D = e^{-L} + phi_x.
inline double absorption_probability(const RateFamily& r, int j, double t) {
  detail::check_jt(j, t);
  if (const auto* c = std::get_if<Constant>(&r.kind())) return homogeneous::absorption_prob(c->lambda, c->mu, j, t);
  const auto tr = r.transforms(t);
  if (const auto* p = std::get_if<Proportional>(&r.kind())) return proportional::absorption_prop(p->rho, tr.M, j);
  // D - 1 = int mu e^{-L} >= 0
  const double dm1 = std::max(0.0, tr.phi_x + std::expm1(-tr.L));
  return std::pow(dm1 / (1.0 + dm1), static_cast<double>(j));
}

/// Time t~ at which m_X - m_Y changes sign (m_X > m_Y on [0, t~)); none when
/// m_X > m_Y for all t. Constant and proportional families only.
inline std::optional<double> crossing_time(const RateFamily& r, double t_max = 1e6) {
  if (const auto* c = std::get_if<Constant>(&r.kind())) return homogeneous::crossing_time(c->lambda, c->mu);
  const auto* p = std::get_if<Proportional>(&r.kind());
  if (!p) throw DomainError("crossing_time: only constant or proportional rates are supported");
  const auto m_star = proportional::crossing_threshold(p->rho);
  if (!m_star) return std::nullopt;
  if (const auto* cm = std::get_if<ConstantMu>(&p->base)) return *m_star / cm->mu;
  if (const auto* cv = std::get_if<CurveInduced>(&p->base)) {
    const double t = growth::crossing_time_curve(cv->curve);
    if (t == 0.0) return std::nullopt;
    return t;
  }
  // M nondecreasing: expand a bracket then bisect.
  auto f = [&](double t) { return big_m(r, t) - *m_star; };
  double hi = 1.0;
  while (f(hi) < 0.0) {
    hi *= 2.0;
    if (hi > t_max) return std::nullopt;
  }
  return numeric::bisect(f, 0.0, hi);
}

/// Crossing time by bracketing on (m_X(t) - m_Y(t)) / j directly; used to cross-check
/// the closed forms. None when no sign change occurs before t_max. A bracket end
/// only counts once the difference is negative beyond rounding of eta and A; on
/// the lambda = 2 mu boundary the gap stays at 1 while both terms grow.
inline std::optional<double> crossing_time_numeric(const RateFamily& r, double t_max = 1e4) {
  auto f = [&](double t) {
    const auto tr = r.transforms(t);
    return tr.eta() - tr.A;
  };
  auto resolved_negative = [&](double t) {
    const auto tr = r.transforms(t);
    const double noise = 64.0 * std::numeric_limits<double>::epsilon() * std::max(tr.eta(), tr.A);
    return tr.eta() - tr.A < -noise;
  };
  double hi = 0.25;
  while (!resolved_negative(hi)) {
    hi *= 2.0;
    if (hi > t_max) return std::nullopt;
  }
  return numeric::bisect(f, 0.0, hi, 1e-15, 1e-15);
}

/// Time at which the Fano factor of X reaches 1 (X underdispersed before it),
/// found by root-finding on D_X(t) = 1. None if it is not reached before t_max.
inline std::optional<double> underdispersion_threshold(const RateFamily& r, int j, double t_max = 1e3) {
  auto f = [&](double t) { return moment_report(r, j, t).fano_x - 1.0; };
  double hi = 1e-3;
  while (f(hi) < 0.0) {
    hi *= 2.0;
    if (hi > t_max) return std::nullopt;
  }
  return numeric::bisect(f, 0.0, hi, 1e-14, 1e-14);
}

}  // namespace rumorbd
