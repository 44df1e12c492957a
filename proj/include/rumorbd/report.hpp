#pragma once

#include <algorithm>
#include <cmath>

#include "rumorbd/numeric.hpp"

namespace rumorbd {

/// Conditional first and second order indexes of (X(t), Y(t)) given (X(0), Y(0)) = (j, 0).
struct MomentReport {
  double t = 0.0;
  double j = 1.0;
  double m_x = 0.0;
  double m_y = 0.0;
  double var_x = 0.0;
  double var_y = 0.0;
  double m2_y = 0.0;
  double m_xy = 0.0;
  double cov = 0.0;
  double corr = 0.0;
  double fano_x = 0.0;
  double fano_y = 0.0;
  double cv_x = 0.0;
  double cv_y = 0.0;
  double r_index = 0.0;
  /// corr holds the t -> 0+ limit because both variances vanish.
  bool corr_is_limit = false;
  /// Some exp((rho-1)M) term overflowed; log_m_x / log_m_y stay finite.
  bool overflow = false;
  double log_m_x = 0.0;
  double log_m_y = -numeric::kInf;
};

namespace detail {

/// Var_Y from m2_y - m_y^2; roundoff negatives down to -1e-12 (relative) clamp to 0.
inline double variance_from_moments(double second, double mean) {
  double v = second - mean * mean;
  if (v < 0.0 && v >= -1e-12 * std::max(1.0, std::abs(second))) v = 0.0;
  return v;
}

/// Fills cov, corr, fano and cv fields from the primary moments.
/// corr_at_zero is the analytic t -> 0+ limit used when both variances vanish.
inline void complete_report(MomentReport& r, double corr_at_zero) {
  r.var_y = variance_from_moments(r.m2_y, r.m_y);
  r.cov = r.m_xy - r.m_x * r.m_y;
  if (r.var_x > 0.0 && r.var_y > 0.0) {
    r.corr = r.cov / std::sqrt(r.var_x * r.var_y);
    r.corr = std::clamp(r.corr, -1.0, 1.0);
    r.corr_is_limit = false;
  } else {
    r.corr = corr_at_zero;
    r.corr_is_limit = true;
  }
  r.fano_x = r.m_x > 0.0 ? r.var_x / r.m_x : 0.0;
  r.cv_x = r.m_x > 0.0 ? std::sqrt(r.var_x) / r.m_x : numeric::kInf;
  if (r.m_y > 0.0) {
    r.fano_y = r.var_y / r.m_y;
    r.cv_y = std::sqrt(r.var_y) / r.m_y;
  } else {
    // Y(t) ~ Poisson for vanishing t.
    r.fano_y = 1.0;
    r.cv_y = numeric::kInf;
  }
}

}  // namespace detail
}  // namespace rumorbd
