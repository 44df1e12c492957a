#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "rumorbd/error.hpp"
#include "rumorbd/rates.hpp"

// Transition probabilities p_{n,k}(t) from the forward Kolmogorov equations on the
// truncated box 0 <= n <= n_max, 0 <= k <= k_max. Jumps leaving the box are
// accumulated in leaked_mass instead of being reflected.
namespace rumorbd::oracle {

struct TruncatedGrid {
  int j = 1;
  int n_max = 0;
  int k_max = 0;
  double t = 0.0;
  /// Row-major, index n * (k_max + 1) + k.
  std::vector<double> p;
  double leaked_mass = 0.0;

  double at(int n, int k) const {
    if (n < 0 || k < 0 || n > n_max || k > k_max) return 0.0;
    return p[static_cast<std::size_t>(n) * static_cast<std::size_t>(k_max + 1) + static_cast<std::size_t>(k)];
  }
  double total_mass() const {
    double s = 0.0;
    for (double v : p) s += v;
    return s;
  }
};

struct StepControl {
  double max_step = 0.01;
  /// h <= stability / (n_max * sup(lambda + mu)).
  double stability = 0.1;
  /// Leaked mass above this raises TruncationError.
  double leak_tolerance = 1e-4;
};

namespace detail {

inline void forward_rhs(const std::vector<double>& p, std::vector<double>& dp, double& dleak, int j, int n_max,
                        int k_max, double lam, double mu) {
  const int kw = k_max + 1;
  dleak = 0.0;
  for (int n = 0; n <= n_max; ++n) {
    const int k_lo = std::max(0, j - n);
    for (int k = 0; k < k_lo && k <= k_max; ++k) dp[n * kw + k] = 0.0;
    for (int k = k_lo; k <= k_max; ++k) {
      double v = 0.0;
      if (n >= 1) v += (n - 1) * lam * p[(n - 1) * kw + k];
      if (n + 1 <= n_max && k >= 1) v += (n + 1) * mu * p[(n + 1) * kw + k - 1];
      const double here = p[n * kw + k];
      v -= n * (lam + mu) * here;
      dp[n * kw + k] = v;
      if (n == n_max) dleak += n * lam * here;
      if (k == k_max) dleak += n * mu * here;
    }
  }
}

}  // namespace detail

/// Classical RK4 on the truncated forward equations from p(0) = delta_{(j, 0)}.
inline TruncatedGrid solve_forward(const RateFamily& rates, int j, double t, int n_max, int k_max,
                                   StepControl ctl = {}) {
  if (j < 1) throw DomainError("oracle: j must be >= 1");
  if (!(t >= 0.0)) throw DomainError("oracle: t must be nonnegative");
  if (n_max < j + 5 || k_max < j + 5) throw DomainError("oracle: n_max and k_max must be >= j + 5");
  TruncatedGrid g;
  g.j = j;
  g.n_max = n_max;
  g.k_max = k_max;
  g.t = t;
  const std::size_t size = static_cast<std::size_t>(n_max + 1) * static_cast<std::size_t>(k_max + 1);
  g.p.assign(size, 0.0);
  g.p[static_cast<std::size_t>(j) * static_cast<std::size_t>(k_max + 1)] = 1.0;
  if (t == 0.0) return g;

  const double sup = rates.sup_total(0.0, t);
  const double h_max = std::min(ctl.max_step, ctl.stability / (n_max * sup));
  const long steps = std::max(1L, static_cast<long>(std::ceil(t / h_max)));
  const double h = t / static_cast<double>(steps);

  std::vector<double> k1(size), k2(size), k3(size), k4(size), tmp(size);
  double l1 = 0, l2 = 0, l3 = 0, l4 = 0;
  auto eval = [&](const std::vector<double>& p, std::vector<double>& dp, double& dl, double s) {
    detail::forward_rhs(p, dp, dl, j, n_max, k_max, rates.lambda(s), rates.mu(s));
  };
  for (long step = 0; step < steps; ++step) {
    const double s = h * static_cast<double>(step);
    eval(g.p, k1, l1, s);
    for (std::size_t i = 0; i < size; ++i) tmp[i] = g.p[i] + 0.5 * h * k1[i];
    eval(tmp, k2, l2, s + 0.5 * h);
    for (std::size_t i = 0; i < size; ++i) tmp[i] = g.p[i] + 0.5 * h * k2[i];
    eval(tmp, k3, l3, s + 0.5 * h);
    for (std::size_t i = 0; i < size; ++i) tmp[i] = g.p[i] + h * k3[i];
    eval(tmp, k4, l4, s + h);
    for (std::size_t i = 0; i < size; ++i) {
      g.p[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    g.leaked_mass += h / 6.0 * (l1 + 2.0 * l2 + 2.0 * l3 + l4);
    if (g.leaked_mass > ctl.leak_tolerance) {
      throw TruncationError("oracle: probability leaked out of the truncated grid; enlarge n_max/k_max",
                            g.leaked_mass);
    }
  }
  // RK4 roundoff can leave entries of order -1e-18.
  for (double& v : g.p) v = std::max(v, 0.0);
  return g;
}

struct GridMoments {
  double m_x = 0.0;
  double m_y = 0.0;
  double var_x = 0.0;
  double var_y = 0.0;
  double cov = 0.0;
  double m2_y = 0.0;
  double m_xy = 0.0;
};

/// Expectations over the truncated table. Requires leaked_mass <= 1e-6.
inline GridMoments moments_from_grid(const TruncatedGrid& g) {
  if (g.leaked_mass > 1e-6) {
    throw TruncationError("oracle: moments need leaked mass <= 1e-6", g.leaked_mass);
  }
  GridMoments m;
  double m2x = 0.0;
  for (int n = 0; n <= g.n_max; ++n) {
    for (int k = 0; k <= g.k_max; ++k) {
      const double p = g.at(n, k);
      m.m_x += n * p;
      m.m_y += k * p;
      m2x += static_cast<double>(n) * n * p;
      m.m2_y += static_cast<double>(k) * k * p;
      m.m_xy += static_cast<double>(n) * k * p;
    }
  }
  m.var_x = std::max(0.0, m2x - m.m_x * m.m_x);
  m.var_y = std::max(0.0, m.m2_y - m.m_y * m.m_y);
  m.cov = m.m_xy - m.m_x * m.m_y;
  return m;
}

/// Mass on the absorbing row n = 0.
inline double absorbed_mass(const TruncatedGrid& g) {
  double s = 0.0;
  for (int k = 0; k <= g.k_max; ++k) s += g.at(0, k);
  return s;
}

}  // namespace rumorbd::oracle
