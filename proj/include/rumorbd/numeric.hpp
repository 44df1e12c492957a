#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "rumorbd/error.hpp"

namespace rumorbd::numeric {

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// (e^x - 1) / x, continuous at 0.
inline double expm1_over(double x) {
  if (x == 0.0) return 1.0;
  return std::expm1(x) / x;
}

/// (1 - e^{-x}) / x, continuous at 0.
inline double one_minus_exp_neg_over(double x) {
  if (x == 0.0) return 1.0;
  return -std::expm1(-x) / x;
}

/// (e^x - 1 - x) / x^2, continuous at 0 (value 1/2).
inline double expm1_minus_x_over_sq(double x) {
  if (std::abs(x) < 0.5) {
    // sum_{n>=2} x^{n-2} / n!
    double term = 0.5;
    double sum = 0.0;
    for (int n = 2; n < 40; ++n) {
      sum += term;
      term *= x / static_cast<double>(n + 1);
      if (std::abs(term) < 1e-18 * std::abs(sum)) break;
    }
    return sum;
  }
  return (std::expm1(x) - x) / (x * x);
}

/// ((e^{2x} - 1)/2 - x e^x) / x^3, continuous at 0 (value 1/6).
inline double half_expm1_2x_minus_x_exp_over_cube(double x) {
  if (std::abs(x) < 0.5) {
    // coefficient of x^{n-3}: 2^{n-1}/n! - 1/(n-1)!
    double pow2_over_fact = 8.0 / 6.0 / 2.0;  // 2^{n-1}/n! at n = 3
    double inv_fact = 0.5;                    // 1/(n-1)! at n = 3
    double xp = 1.0;
    double sum = 0.0;
    for (int n = 3; n < 45; ++n) {
      const double term = (pow2_over_fact - inv_fact) * xp;
      sum += term;
      if (n > 5 && std::abs(term) < 1e-18 * std::abs(sum)) break;
      pow2_over_fact *= 2.0 / static_cast<double>(n + 1);
      inv_fact /= static_cast<double>(n);
      xp *= x;
    }
    return sum;
  }
  return (0.5 * std::expm1(2.0 * x) - x * std::exp(x)) / (x * x * x);
}

/// log(e^a + e^b) without overflow.
inline double log_add_exp(double a, double b) {
  if (a == -kInf) return b;
  if (b == -kInf) return a;
  const double hi = std::max(a, b);
  const double lo = std::min(a, b);
  return hi + std::log1p(std::exp(lo - hi));
}

/// log of the binomial coefficient C(n, k) for 0 <= k <= n.
inline double log_choose(double n, double k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

/// Evenly spaced points a + (b - a) i / (n - 1), i = 0..n-1.
inline std::vector<double> linspace(double a, double b, std::size_t n) {
  std::vector<double> out(n);
  if (n == 1) {
    out[0] = a;
    return out;
  }
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
  }
  out.back() = b;
  return out;
}

/// Bisection on [lo, hi] where f(lo) and f(hi) have opposite signs.
/// Stops when the bracket is below abs_tol + rel_tol * |mid|.
inline double bisect(const std::function<double(double)>& f, double lo, double hi,
                     double abs_tol = 1e-15, double rel_tol = 4e-16) {
  double flo = f(lo);
  const double fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo > 0.0) == (fhi > 0.0)) {
    throw DomainError("bisect: root is not bracketed");
  }
  for (int it = 0; it < 400; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (hi - lo <= abs_tol + rel_tol * std::abs(mid)) return mid;
    const double fm = f(mid);
    if (fm == 0.0) return mid;
    if ((fm > 0.0) == (flo > 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

/// Scans f on a grid over [a, b] and refines the first sign change by bisection.
/// Returns nullopt when no sign change is observed on the grid.
inline std::optional<double> first_sign_change(const std::function<double(double)>& f,
                                               double a, double b, std::size_t samples) {
  double prev_t = a;
  double prev_f = f(a);
  for (std::size_t i = 1; i < samples; ++i) {
    const double t = a + (b - a) * static_cast<double>(i) / static_cast<double>(samples - 1);
    const double ft = f(t);
    if (!std::isfinite(ft)) break;
    if (prev_f == 0.0 && i > 1) return prev_t;
    if ((ft > 0.0) != (prev_f > 0.0) && prev_f != 0.0) {
      return bisect(f, prev_t, t);
    }
    prev_t = t;
    prev_f = ft;
  }
  return std::nullopt;
}

}  // namespace rumorbd::numeric
