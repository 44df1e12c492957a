#pragma once

#include <cmath>
#include <complex>
#include <limits>
#include <optional>
#include <type_traits>

#include "rumorbd/error.hpp"
#include "rumorbd/numeric.hpp"
#include "rumorbd/report.hpp"

// Closed forms for lambda(t) = rho * mu(t). Every quantity is a function of the
// cumulative inactivity intensity M = int_0^t mu, so the constant-rate case is the
// special instance rho = lambda / mu, M = mu * t.
namespace rumorbd::proportional {

namespace detail {

template <class T>
T one_minus_exp_neg_over(T x) {
  if constexpr (std::is_floating_point_v<T>) {
    return numeric::one_minus_exp_neg_over(x);
  } else {
    if (std::abs(x) < 1e-3) {
      return T(1.0) - x / 2.0 + x * x / 6.0 - x * x * x / 24.0 + x * x * x * x / 120.0;
    }
    return (T(1.0) - std::exp(-x)) / x;
  }
}

/// Single-spreader p.g.f. for rates (rho, 1) at time tau.
/// rho_is_one selects the critical closed form.
template <class T>
T unit_pgf(double rho, double tau, T z1, T z2, bool rho_is_one) {
  if (rho_is_one) {
    const T s = std::sqrt(T(1.0) - z2);
    const T two_as = 2.0 * tau * s;
    // f = (1 - e^{-2as}) / s and w = e^{-2as}: the printed ratio divided by e^{2as}.
    const T f = 2.0 * tau * one_minus_exp_neg_over(two_as);
    const T w = std::exp(-two_as);
    const T num = z1 * (f - T(1.0) - w) - z2 * f;
    const T den = -(T(1.0) - z1) * f - T(1.0) - w;
    return num / den;
  }
  // (rho+1)^2 - 4 z2 rho written without cancellation near z2 = 1, rho = 1.
  const T disc = T((rho - 1.0) * (rho - 1.0)) + 4.0 * rho * (T(1.0) - z2);
  const T root = std::sqrt(disc);
  const T big = T(rho + 1.0) + root;
  const T xi2 = big / (2.0 * rho);
  const T xi1 = 2.0 * z2 / big;
  const T d = root / rho;
  const T w = std::exp(-rho * tau * d);
  const T u = z1 - xi1;
  if (std::abs(w) < 0.5) {
    return (xi1 * (xi2 - z1) + xi2 * w * u) / ((xi2 - z1) + w * u);
  }
  // same ratio divided by d, with g = (1 - w) / d kept finite as d -> 0
  const T g = rho * tau * one_minus_exp_neg_over(rho * tau * d);
  return (z1 - xi2 * g * u) / (T(1.0) - g * u);
}

inline bool near_one(double rho) { return std::abs(rho - 1.0) / std::max(rho, 1.0) < 1e-9; }

inline void check_rho_m(double rho, double big_m) {
  if (!(rho > 0.0) || !std::isfinite(rho)) throw DomainError("rho must be positive and finite");
  if (!(big_m >= 0.0)) throw DomainError("M must be nonnegative");
}

/// p0k limit with lambda/mu = rho, log domain.
inline double p0k_from_ratio(double rho, int j, int k) {
  if (j < 1) throw DomainError("j must be >= 1");
  if (k < j) throw DomainError("p0k_limit requires k >= j");
  // C(2k-j-1, k-1) - C(2k-j-1, k) = C(2k-j-1, k-1) * j / k
  const double log_q = std::log(rho) - 2.0 * std::log1p(rho);
  const double log_v = static_cast<double>(k) * log_q +
                       static_cast<double>(j) * std::log1p(1.0 / rho) +
                       numeric::log_choose(2.0 * k - j - 1.0, k - 1.0);
  return std::exp(log_v) * static_cast<double>(j) / static_cast<double>(k);
}

/// sum_{k >= j} p0k with ratio rho. Terms decay like k^{-3/2} (4q)^k with
/// q = rho/(1+rho)^2, so near rho = 1 the tail past K is added from that asymptotic.
inline double p0k_series_from_ratio(double rho, int j) {
  double sum = 0.0;
  const int k_stop = j + 200'000;
  int k = j;
  double term = 0.0;
  for (; k < k_stop; ++k) {
    term = p0k_from_ratio(rho, j, k);
    sum += term;
    if (term < 1e-18 * sum && k > j + 10) return sum;
  }
  const double kk = static_cast<double>(k_stop - 1);
  const double ratio = 4.0 * rho / ((1.0 + rho) * (1.0 + rho));
  if (ratio >= 1.0 - 1e-15) {
    // sum_{i > K} c i^{-3/2} ~ c * 2 / sqrt(K + 1/2)
    return sum + term * std::pow(kk, 1.5) * 2.0 / std::sqrt(kk + 0.5);
  }
  double geo = 1.0;
  for (long i = 1; i < 100'000'000; ++i) {
    geo *= ratio;
    const double t = term * geo * std::pow(1.0 + static_cast<double>(i) / kk, -1.5);
    sum += t;
    if (t < 1e-18 * sum) break;
  }
  return sum;
}

/// Moments from the stable integral forms A, B, C (valid for every rho, M).
inline MomentReport stable_moments(double rho, double big_m, double j) {
  const double c = rho - 1.0;
  const double x = c * big_m;
  const double e = std::exp(x);
  const double a = big_m * numeric::expm1_over(x);
  const double b = rho * big_m * big_m * numeric::expm1_minus_x_over_sq(x);
  const double cc = rho * big_m * big_m * big_m * numeric::half_expm1_2x_minus_x_exp_over_cube(x);
  MomentReport r;
  r.j = j;
  r.m_x = j * e;
  r.var_x = j * (rho + 1.0) * e * a;
  r.m_y = j * a;
  r.m2_y = j * (a + 4.0 * cc + (j - 1.0) * a * a);
  const double gamma = (j - 1.0) * a + 2.0 * b;
  r.m_xy = r.m_x * gamma;
  r.r_index = a > 0.0 ? gamma / (j * a) : 1.0 - 1.0 / j;
  return r;
}

}  // namespace detail

/// p.g.f. E[z1^X z2^Y] for X(0) = j, Y(0) = 0 as a function of M.
inline double pgf_prop(double rho, double big_m, int j, double z1, double z2) {
  detail::check_rho_m(rho, big_m);
  if (j < 1) throw DomainError("j must be >= 1");
  if (std::abs(z1) > 1.0 || std::abs(z2) > 1.0) throw DomainError("pgf requires |z1|, |z2| <= 1");
  const double g = detail::unit_pgf<double>(rho, big_m, z1, z2, detail::near_one(rho));
  return std::pow(g, j);
}

/// Complex-argument p.g.f. used internally for derivative checks.
inline std::complex<double> pgf_prop_complex(double rho, double big_m, int j, std::complex<double> z1,
                                             std::complex<double> z2) {
  detail::check_rho_m(rho, big_m);
  const auto g = detail::unit_pgf<std::complex<double>>(rho, big_m, z1, z2, detail::near_one(rho));
  return std::pow(g, static_cast<double>(j));
}

/// P(X(t) = 0), written as (u / (rho u + 1))^j with u = (e^{(rho-1)M} - 1)/(rho - 1).
inline double absorption_prop(double rho, double big_m, double j) {
  detail::check_rho_m(rho, big_m);
  const double u = big_m * numeric::expm1_over((rho - 1.0) * big_m);
  if (u == 0.0) return 0.0;
  const double base = 1.0 / (rho + 1.0 / u);
  return std::pow(base, j);
}

/// Limit of the absorption probability as t grows; m_limit may be +infinity.
inline double absorption_prop_limit(double rho, double m_limit, double j) {
  detail::check_rho_m(rho, m_limit);
  if (std::isinf(m_limit)) return rho > 1.0 ? std::pow(rho, -j) : 1.0;
  return absorption_prop(rho, m_limit, j);
}

/// lim p_{0,k}(t) when M(t) diverges.
inline double p0k_limit_prop(double rho, int j, int k) {
  detail::check_rho_m(rho, 0.0);
  return detail::p0k_from_ratio(rho, j, k);
}

/// sum_{k >= j} p0k_limit_prop(rho, j, k), including the slowly decaying critical tail.
inline double p0k_limit_sum_prop(double rho, int j) {
  detail::check_rho_m(rho, 0.0);
  return detail::p0k_series_from_ratio(rho, j);
}

/// P((X, Y) = (0, 1)) for j = 1.
inline double p01_prop(double rho, double big_m) {
  detail::check_rho_m(rho, big_m);
  return -std::expm1(-(1.0 + rho) * big_m) / (1.0 + rho);
}

/// Value M* such that m_X > m_Y exactly while M < M*; none when rho >= 2.
inline std::optional<double> crossing_threshold(double rho) {
  detail::check_rho_m(rho, 0.0);
  if (rho >= 2.0) return std::nullopt;
  const double c = rho - 1.0;
  if (c == 0.0) return 1.0;
  return -std::log1p(-c) / c;
}

/// Conditional moments for given (rho, M, j). The t field is left at 0.
/// For |(rho-1)M| >= 0.05 the closed forms in (rho, M) are used directly; closer to
/// the critical line their 1/(rho-1)^3 cancellation is avoided through the
/// equivalent expm1-based forms. Above exp(700) the primary moments overflow and the
/// report carries log_m_x, log_m_y with overflow = true.
inline MomentReport moments_prop(double rho, double big_m, double j) {
  detail::check_rho_m(rho, big_m);
  if (!(j > 0.0)) throw DomainError("j must be positive");
  const double c = rho - 1.0;
  const double x = c * big_m;
  MomentReport r;
  r.j = j;
  r.log_m_x = std::log(j) + x;
  r.log_m_y = big_m > 0.0 ? std::log(j) + std::log(big_m) +
                                (x > 30.0 ? x - std::log(x) + std::log1p(-std::exp(-x))
                                          : std::log(numeric::expm1_over(x)))
                          : -numeric::kInf;
  const double corr0 = -std::sqrt(1.0 / (1.0 + rho));

  if (x > 700.0) {
    r.overflow = true;
    r.m_x = numeric::kInf;
    r.m_y = numeric::kInf;
    r.var_x = numeric::kInf;
    r.m2_y = numeric::kInf;
    r.var_y = numeric::kInf;
    r.m_xy = numeric::kInf;
    r.cov = numeric::kInf;
    r.corr = numeric::kNaN;
    r.r_index = 1.0 + (rho + 1.0) / (j * c);
    r.fano_x = numeric::kInf;
    r.fano_y = numeric::kInf;
    r.cv_x = std::sqrt((rho + 1.0) / (j * c));
    r.cv_y = numeric::kNaN;
    return r;
  }

  if (std::abs(x) < 0.05) {
    MomentReport s = detail::stable_moments(rho, big_m, j);
    s.log_m_x = r.log_m_x;
    s.log_m_y = r.log_m_y;
    rumorbd::detail::complete_report(s, corr0);
    return s;
  }

  const double e = std::exp(x);
  const double em1 = std::expm1(x);
  r.m_x = j * e;
  r.var_x = j * (rho + 1.0) / c * e * em1;
  r.m_y = j / c * em1;
  r.m2_y = j * (rho + 1.0 - 2.0 * j) / (c * c) * em1 - 4.0 * rho * j / (c * c) * big_m * e +
           j * (1.0 + j * c + rho) / (c * c * c) * std::expm1(2.0 * x);
  r.m_xy = j * e * (-2.0 * rho / c * big_m + (j - 1.0 + 2.0 * rho / c) * em1 / c);
  r.r_index = 1.0 + ((rho + 1.0) / c - 2.0 * rho * big_m / em1) / j;
  rumorbd::detail::complete_report(r, corr0);
  return r;
}

}  // namespace rumorbd::proportional
