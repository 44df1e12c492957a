#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <optional>

#include "rumorbd/error.hpp"
#include "rumorbd/numeric.hpp"
#include "rumorbd/proportional.hpp"
#include "rumorbd/report.hpp"

// Constant intensities lambda, mu.
namespace rumorbd::homogeneous {

namespace detail {

inline void check_rates(double lambda, double mu) {
  if (!(lambda > 0.0) || !(mu > 0.0) || !std::isfinite(lambda) || !std::isfinite(mu)) {
    throw DomainError("lambda and mu must be positive and finite");
  }
}

inline bool critical(double lambda, double mu) {
  return std::abs(lambda - mu) / std::max(lambda, mu) < 1e-9;
}

}  // namespace detail

/// [G(z1, z2, t)]^j with G the single-spreader p.g.f.
template <class T>
T pgf_t(double lambda, double mu, int j, T z1, T z2, double t) {
  detail::check_rates(lambda, mu);
  if (j < 1) throw DomainError("j must be >= 1");
  if (!(t >= 0.0)) throw DomainError("t must be nonnegative");
  const T g = proportional::detail::unit_pgf<T>(lambda / mu, mu * t, z1, z2, detail::critical(lambda, mu));
  if constexpr (std::is_floating_point_v<T>) {
    return std::pow(g, j);
  } else {
    return std::pow(g, static_cast<double>(j));
  }
}

inline double pgf(double lambda, double mu, int j, double z1, double z2, double t) {
  if (std::abs(z1) > 1.0 || std::abs(z2) > 1.0) throw DomainError("pgf requires |z1|, |z2| <= 1");
  return pgf_t<double>(lambda, mu, j, z1, z2, t);
}

/// P(X(t) = 0 | X(0) = j).
inline double absorption_prob(double lambda, double mu, int j, double t) {
  detail::check_rates(lambda, mu);
  if (j < 1) throw DomainError("j must be >= 1");
  if (!(t >= 0.0)) throw DomainError("t must be nonnegative");
  if (detail::critical(lambda, mu)) {
    const double mt = mu * t;
    return std::pow(mt / (1.0 + mt), j);
  }
  const double x = (lambda - mu) * t;
  // (e^x - 1)/(lambda e^x - mu) * mu, rearranged to stay finite for large |x|
  const double u = t * numeric::expm1_over(x);
  if (u == 0.0) return 0.0;
  return std::pow(mu / (lambda + 1.0 / u), j);
}

inline double absorption_limit(double lambda, double mu, int j) {
  detail::check_rates(lambda, mu);
  if (j < 1) throw DomainError("j must be >= 1");
  if (lambda <= mu) return 1.0;
  return std::pow(mu / lambda, j);
}

/// lim p_{0,k}(t), k >= j.
inline double p0k_limit(double lambda, double mu, int j, int k) {
  detail::check_rates(lambda, mu);
  return proportional::detail::p0k_from_ratio(lambda / mu, j, k);
}

/// sum_{k >= j} p0k_limit, with the critical k^{-3/2} tail included.
inline double p0k_limit_sum(double lambda, double mu, int j) {
  detail::check_rates(lambda, mu);
  return proportional::detail::p0k_series_from_ratio(lambda / mu, j);
}

/// P((X(t), Y(t)) = (0, 1) | (1, 0)).
inline double p01(double lambda, double mu, double t) {
  detail::check_rates(lambda, mu);
  if (!(t >= 0.0)) throw DomainError("t must be nonnegative");
  return -mu * std::expm1(-(lambda + mu) * t) / (lambda + mu);
}

/// Closed-form conditional moments for constant rates.
/// Var_Y, Cov and Corr come from their own constant-rate expressions; with
/// c = lambda - mu and E = e^{ct},
///   Cov = j mu E [(lambda + mu)(E - 1) - 2 lambda c t] / c^2   (j mu t (mu t - 1) at c = 0).
/// Close to the critical line (|ct| < 0.05) the expm1-based forms are used instead.
inline MomentReport moments(double lambda, double mu, int j, double t) {
  detail::check_rates(lambda, mu);
  if (j < 1) throw DomainError("j must be >= 1");
  if (!(t >= 0.0)) throw DomainError("t must be nonnegative");
  const double jd = static_cast<double>(j);
  const double c = lambda - mu;
  const double x = c * t;
  const double corr0 = -std::sqrt(mu / (lambda + mu));
  MomentReport r;
  if (detail::critical(lambda, mu) || std::abs(x) < 0.05 || x > 700.0) {
    r = proportional::moments_prop(lambda / mu, mu * t, jd);
    r.t = t;
    if (detail::critical(lambda, mu)) {
      const double mt = mu * t;
      r.m_x = jd;
      r.var_x = 2.0 * jd * mt;
      r.m_y = jd * mt;
      r.m2_y = jd * mt * (3.0 + 3.0 * (jd - 1.0) * mt + 2.0 * mt * mt) / 3.0;
      r.m_xy = jd * mu * t * (jd + mt - 1.0);
      r.r_index = 1.0 + (mt - 1.0) / jd;
      rumorbd::detail::complete_report(r, corr0);
      r.var_y = jd * mt * (3.0 - 3.0 * mt + 2.0 * mt * mt) / 3.0;
      r.cov = jd * mt * (mt - 1.0);
      if (t > 0.0) {
        r.corr = std::sqrt(3.0) * (mt - 1.0) / std::sqrt(6.0 - 6.0 * mt + 4.0 * mt * mt);
        r.corr_is_limit = false;
      }
    }
    return r;
  }
  const double e = std::exp(x);
  const double em1 = std::expm1(x);
  r.t = t;
  r.j = jd;
  r.m_x = jd * e;
  r.var_x = jd * (lambda + mu) / c * e * em1;
  r.m_y = jd * mu * em1 / c;
  r.m2_y = jd * mu / (c * c * c) *
           (-lambda * lambda - lambda * mu + jd * lambda * mu - jd * mu * mu +
            e * e * mu * (lambda + jd * lambda + mu - jd * mu) +
            e * (mu - lambda) * ((2.0 * jd - 1.0) * mu + lambda * (4.0 * mu * t - 1.0)));
  r.m_xy = jd * mu * e / (mu - lambda) * (2.0 * lambda * t - em1 * (lambda + jd * lambda + mu - jd * mu) / c);
  r.r_index = 1.0 + ((lambda + mu) / c - 2.0 * lambda * t / em1) / jd;
  rumorbd::detail::complete_report(r, corr0);
  r.var_y = jd * mu / (c * c * c) *
            (-lambda * (lambda + mu) + e * e * mu * (lambda + mu) +
             e * (mu - lambda) * (-mu + lambda * (4.0 * mu * t - 1.0)));
  r.var_y = std::max(r.var_y, 0.0);
  r.cov = jd * mu * e * ((lambda + mu) * em1 - 2.0 * lambda * x) / (c * c);
  r.corr = std::clamp(r.cov / std::sqrt(r.var_x * r.var_y), -1.0, 1.0);
  r.fano_y = r.var_y / r.m_y;
  r.cv_y = std::sqrt(r.var_y) / r.m_y;
  return r;
}

/// Time at which m_X - m_Y changes sign; none when lambda >= 2 mu.
/// For lambda < 2 mu, m_X > m_Y exactly on [0, t~).
inline std::optional<double> crossing_time(double lambda, double mu) {
  detail::check_rates(lambda, mu);
  if (lambda >= 2.0 * mu) return std::nullopt;
  if (detail::critical(lambda, mu)) return 1.0 / mu;
  return std::log(mu / (2.0 * mu - lambda)) / (lambda - mu);
}

}  // namespace rumorbd::homogeneous
