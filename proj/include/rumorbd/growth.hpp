#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <type_traits>
#include <variant>
#include <vector>

#include "rumorbd/error.hpp"
#include "rumorbd/numeric.hpp"
#include "rumorbd/proportional.hpp"
#include "rumorbd/report.hpp"

// Sigmoidal growth curves used as conditional means of X (six families) or of Y
// (Korf, Mitscherlich), and the proportional-intensity model each one induces.
namespace rumorbd::growth {

struct Gompertz {
  double alpha = 1.0;
  double beta = 1.0;
};
struct GenGompertz {
  double A = 1.0;
  double b = 1.0;
};
struct Logistic {
  double C = 2.0;
  double r = 1.0;
};
struct ExtLogistic {
  double N = 2.0;
  double eps = 0.0;
};
/// Q(t) = beta[0] t + beta[1] t^2 + beta[2] t^3 + beta[3] t^4.
struct MultisigLogistic {
  double C = 2.0;
  std::array<double, 4> beta{};
};
struct ModKorf {
  double alpha = 1.0;
  double beta = 1.0;
};
struct Korf {
  double alpha = 1.0;
  double beta = 1.0;
};
struct Mitscherlich {
  double alpha = 1.0;
  double beta = 1.0;
};

using Family = std::variant<Gompertz, GenGompertz, Logistic, ExtLogistic, MultisigLogistic, ModKorf, Korf,
                            Mitscherlich>;

struct GrowthCurve {
  Family family;
  double j = 1.0;
  double rho = 2.0;
};

enum class Target { x, y };

inline Target target(const GrowthCurve& c) {
  return std::holds_alternative<Korf>(c.family) || std::holds_alternative<Mitscherlich>(c.family) ? Target::y
                                                                                                   : Target::x;
}

inline std::string family_name(const Family& f) {
  struct V {
    std::string operator()(const Gompertz&) const { return "gompertz"; }
    std::string operator()(const GenGompertz&) const { return "gen_gompertz"; }
    std::string operator()(const Logistic&) const { return "logistic"; }
    std::string operator()(const ExtLogistic&) const { return "ext_logistic"; }
    std::string operator()(const MultisigLogistic&) const { return "multisig_logistic"; }
    std::string operator()(const ModKorf&) const { return "mod_korf"; }
    std::string operator()(const Korf&) const { return "korf"; }
    std::string operator()(const Mitscherlich&) const { return "mitscherlich"; }
  };
  return std::visit(V{}, f);
}

inline std::string family_name(const GrowthCurve& c) { return family_name(c.family); }

namespace detail {

inline double poly4(const std::array<double, 4>& b, double t) {
  return t * (b[0] + t * (b[1] + t * (b[2] + t * b[3])));
}

inline double poly4_prime(const std::array<double, 4>& b, double t) {
  return b[0] + t * (2.0 * b[1] + t * (3.0 * b[2] + t * 4.0 * b[3]));
}

/// log(j + (C - j) e^q) without overflow.
inline double log_logistic_den(double c, double j, double q) {
  if (q > 0.0) return q + std::log((c - j) + j * std::exp(-q));
  return std::log(j + (c - j) * std::exp(q));
}

struct ExtParts {
  double a, d, p;
};

inline ExtParts ext_parts(const ExtLogistic& e, double j) {
  return {(e.eps - 1.0) * (e.N - j), 2.0 * e.eps * (e.N - j), 2.0 * e.eps * j + e.N * (1.0 - e.eps)};
}

}  // namespace detail

/// Throws DomainError unless the parameters describe an admissible curve.
inline void validate(const GrowthCurve& c) {
  auto need = [](bool ok, const char* what) {
    if (!ok) throw DomainError(what);
  };
  need(c.j > 0.0 && std::isfinite(c.j), "curve: j must be positive");
  need(c.rho > 0.0 && std::isfinite(c.rho), "curve: rho must be positive");
  std::visit(
      [&](const auto& f) {
        using F = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<F, Gompertz> || std::is_same_v<F, ModKorf> || std::is_same_v<F, Korf> ||
                      std::is_same_v<F, Mitscherlich>) {
          need(f.alpha > 0.0 && f.beta > 0.0, "curve: alpha and beta must be positive");
        } else if constexpr (std::is_same_v<F, GenGompertz>) {
          need(f.A > 0.0 && f.b > 0.0, "curve: A and b must be positive");
        } else if constexpr (std::is_same_v<F, Logistic>) {
          need(f.r > 0.0, "curve: r must be positive");
          need(f.C > c.j, "curve: logistic requires 0 < j < C");
        } else if constexpr (std::is_same_v<F, ExtLogistic>) {
          need(f.N > c.j, "curve: extended logistic requires N > j");
          need(f.eps > -1.0 && f.eps < 1.0, "curve: extended logistic requires -1 < eps < 1");
          need(detail::ext_parts(f, c.j).p > 0.0, "curve: extended logistic requires 2 eps j + N (1 - eps) > 0");
        } else if constexpr (std::is_same_v<F, MultisigLogistic>) {
          need(f.C > c.j, "curve: multisigmoidal logistic requires 0 < j < C");
          need(f.beta[3] < 0.0, "curve: multisigmoidal logistic requires beta4 < 0");
        }
      },
      c.family);
  if (target(c) == Target::x || std::holds_alternative<Korf>(c.family)) {
    need(c.rho > 1.0, "curve: this family requires rho > 1");
  } else if (c.rho < 1.0) {
    need(std::get<Mitscherlich>(c.family).beta < c.j / (1.0 - c.rho),
         "curve: mitscherlich with rho < 1 requires beta < j / (1 - rho)");
  }
}

/// log m(t) for X-families; log m_Y(t) for Y-families (-inf at t = 0).
inline double log_eval(const GrowthCurve& c, double t) {
  if (!(t >= 0.0)) throw DomainError("curve: t must be nonnegative");
  const double j = c.j;
  return std::visit(
      [&](const auto& f) -> double {
        using F = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<F, Gompertz>) {
          return std::log(j) - f.alpha * std::expm1(-f.beta * t);
        } else if constexpr (std::is_same_v<F, GenGompertz>) {
          return std::log(j) + f.A * f.b * (1.0 - f.b / (t + f.b));
        } else if constexpr (std::is_same_v<F, Logistic>) {
          return std::log(f.C) + std::log(j) - detail::log_logistic_den(f.C, j, -f.r * t);
        } else if constexpr (std::is_same_v<F, ExtLogistic>) {
          const auto p = detail::ext_parts(f, j);
          const double w = std::exp(-(1.0 + f.eps) * t);
          return std::log(f.N) + std::log(p.a * w + p.p) - std::log(p.d * w + p.p);
        } else if constexpr (std::is_same_v<F, MultisigLogistic>) {
          return std::log(f.C) + std::log(j) - detail::log_logistic_den(f.C, j, detail::poly4(f.beta, t));
        } else if constexpr (std::is_same_v<F, ModKorf>) {
          return std::log(j) - f.alpha / f.beta * std::expm1(-f.beta * std::log1p(t));
        } else if constexpr (std::is_same_v<F, Korf>) {
          if (t == 0.0) return -numeric::kInf;
          return std::log(j / (c.rho - 1.0)) - f.alpha / f.beta * std::pow(t, -f.beta);
        } else {
          return std::log(f.beta) + std::log(-std::expm1(-f.alpha * t));
        }
      },
      c.family);
}

/// Curve value at t: m_X for X-families, m_Y for Y-families.
inline double eval_curve(const GrowthCurve& c, double t) {
  if (!(t >= 0.0)) throw DomainError("curve: t must be nonnegative");
  const double j = c.j;
  return std::visit(
      [&](const auto& f) -> double {
        using F = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<F, Gompertz>) {
          return j * std::exp(f.alpha * (1.0 - std::exp(-f.beta * t)));
        } else if constexpr (std::is_same_v<F, GenGompertz>) {
          return j * std::exp(f.A * f.b * (1.0 - f.b / (t + f.b)));
        } else if constexpr (std::is_same_v<F, Logistic>) {
          return f.C * j / (j + (f.C - j) * std::exp(-f.r * t));
        } else if constexpr (std::is_same_v<F, ExtLogistic>) {
          const auto p = detail::ext_parts(f, j);
          const double w = std::exp(-(1.0 + f.eps) * t);
          return f.N * (p.a * w + p.p) / (p.d * w + p.p);
        } else if constexpr (std::is_same_v<F, MultisigLogistic>) {
          const double q = detail::poly4(f.beta, t);
          if (q > 700.0) return std::exp(log_eval(c, t));
          return f.C * j / (j + (f.C - j) * std::exp(q));
        } else if constexpr (std::is_same_v<F, ModKorf>) {
          return j * std::exp(f.alpha / f.beta * (1.0 - std::pow(1.0 + t, -f.beta)));
        } else if constexpr (std::is_same_v<F, Korf>) {
          if (t == 0.0) return 0.0;
          return j / (c.rho - 1.0) * std::exp(-f.alpha / f.beta * std::pow(t, -f.beta));
        } else {
          return -f.beta * std::expm1(-f.alpha * t);
        }
      },
      c.family);
}

/// Grid check that log m never decreases on [0, t_max]. Only the
/// multisigmoidal logistic can fail it.
inline bool is_nondecreasing(const GrowthCurve& c, double t_max, std::size_t samples) {
  double prev = -numeric::kInf;
  for (std::size_t i = 0; i <= samples; ++i) {
    const double v = log_eval(c, t_max * static_cast<double>(i) / static_cast<double>(samples));
    // rounding noise on the plateau is not a decrease
    if (v < prev - 1e-12 * std::max(1.0, std::abs(prev))) return false;
    prev = v;
  }
  return true;
}

/// Cumulative inactivity intensity M(t) for which the proportional model with
/// ratio rho has the curve as its mean.
inline double induced_m(const GrowthCurve& c, double t) {
  if (!(t >= 0.0)) throw DomainError("curve: t must be nonnegative");
  const double k = c.rho - 1.0;
  if (target(c) == Target::x) {
    if (k == 0.0) throw DomainError("curve: X-targeted families require rho != 1");
    if (t == 0.0) return 0.0;
    return (log_eval(c, t) - std::log(c.j)) / k;
  }
  const double my = eval_curve(c, t);
  const double z = k * my / c.j;
  if (z <= -1.0) throw DomainError("curve: m_Y exceeds j / (1 - rho); no admissible M(t)");
  if (k == 0.0) return my / c.j;
  if (std::holds_alternative<Korf>(c.family)) {
    // z = exp(-(alpha/beta) t^{-beta}) exactly
    const auto& f = std::get<Korf>(c.family);
    if (t == 0.0) return 0.0;
    return std::log1p(std::exp(-f.alpha / f.beta * std::pow(t, -f.beta))) / k;
  }
  return std::log1p(z) / k;
}

/// mu(t) = dM/dt of the induced model.
inline double induced_mu(const GrowthCurve& c, double t) {
  if (!(t >= 0.0)) throw DomainError("curve: t must be nonnegative");
  const double k = c.rho - 1.0;
  const double j = c.j;
  // derivative of log m for X-families, of m_Y for Y-families
  const double d = std::visit(
      [&](const auto& f) -> double {
        using F = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<F, Gompertz>) {
          return f.alpha * f.beta * std::exp(-f.beta * t);
        } else if constexpr (std::is_same_v<F, GenGompertz>) {
          return f.A * f.b * f.b / ((t + f.b) * (t + f.b));
        } else if constexpr (std::is_same_v<F, Logistic>) {
          const double e = std::exp(-f.r * t);
          return f.r * (f.C - j) * e / (j + (f.C - j) * e);
        } else if constexpr (std::is_same_v<F, ExtLogistic>) {
          const auto p = detail::ext_parts(f, j);
          const double w = std::exp(-(1.0 + f.eps) * t);
          return (1.0 + f.eps) * p.p * (p.d - p.a) * w / ((p.a * w + p.p) * (p.d * w + p.p));
        } else if constexpr (std::is_same_v<F, MultisigLogistic>) {
          const double q = detail::poly4(f.beta, t);
          const double qp = detail::poly4_prime(f.beta, t);
          // -(C - j) e^q q' / (j + (C - j) e^q)
          const double share = q > 0.0 ? (f.C - j) / ((f.C - j) + j * std::exp(-q))
                                       : (f.C - j) * std::exp(q) / (j + (f.C - j) * std::exp(q));
          return -share * qp;
        } else if constexpr (std::is_same_v<F, ModKorf>) {
          return f.alpha * std::pow(1.0 + t, -f.beta - 1.0);
        } else if constexpr (std::is_same_v<F, Korf>) {
          if (t == 0.0) return 0.0;
          return eval_curve(c, t) * f.alpha * std::pow(t, -f.beta - 1.0);
        } else {
          return f.beta * f.alpha * std::exp(-f.alpha * t);
        }
      },
      c.family);
  if (target(c) == Target::x) return d / k;
  return d / (j + k * eval_curve(c, t));
}

/// Limit of M(t) as t grows (+inf when it diverges).
inline double induced_m_limit(const GrowthCurve& c) {
  const double k = c.rho - 1.0;
  return std::visit(
      [&](const auto& f) -> double {
        using F = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<F, Gompertz>) {
          return f.alpha / k;
        } else if constexpr (std::is_same_v<F, GenGompertz>) {
          return f.A * f.b / k;
        } else if constexpr (std::is_same_v<F, Logistic>) {
          return std::log(f.C / c.j) / k;
        } else if constexpr (std::is_same_v<F, ExtLogistic>) {
          return std::log(f.N / c.j) / k;
        } else if constexpr (std::is_same_v<F, MultisigLogistic>) {
          return std::log(f.C / c.j) / k;
        } else if constexpr (std::is_same_v<F, ModKorf>) {
          return f.alpha / f.beta / k;
        } else if constexpr (std::is_same_v<F, Korf>) {
          return std::log(2.0) / k;
        } else {
          return k == 0.0 ? f.beta / c.j : std::log1p(k * f.beta / c.j) / k;
        }
      },
      c.family);
}

/// Full conditional report at t for the proportional model induced by the curve.
inline MomentReport derived_report(const GrowthCurve& c, double t) {
  MomentReport r = proportional::moments_prop(c.rho, induced_m(c, t), c.j);
  r.t = t;
  return r;
}

namespace detail {

/// Scans t in [0, horizon] for the first time M(t) reaches m_star.
inline std::optional<double> first_crossing_numeric(const GrowthCurve& c, double m_star, double horizon,
                                                    std::size_t samples) {
  auto f = [&](double t) { return induced_m(c, t) - m_star; };
  return numeric::first_sign_change(f, 0.0, horizon, samples);
}

/// Horizon beyond which the curve sits at its carrying capacity in double precision.
inline double settle_horizon(const GrowthCurve& c) {
  const double lim = induced_m_limit(c);
  double t = 1.0;
  for (int i = 0; i < 40; ++i, t *= 2.0) {
    const double m = induced_m(c, t);
    if (std::isfinite(lim) && std::abs(m - lim) <= 1e-13 * std::max(1.0, std::abs(lim))) break;
  }
  return t;
}

}  // namespace detail

/// Time at which m_X(t) - m_Y(t) changes sign (m_X > m_Y before it).
/// Returns 0 when m_X > m_Y for every t > 0. Closed forms where available;
/// the extended and multisigmoidal logistic use bracketing on M(t) = M*.
inline double crossing_time_curve(const GrowthCurve& c) {
  validate(c);
  const auto m_star_opt = proportional::crossing_threshold(c.rho);
  if (!m_star_opt) return 0.0;
  const double k = c.rho - 1.0;
  const double big_l = k * *m_star_opt;  // -log(2 - rho)
  const double j = c.j;
  return std::visit(
      [&](const auto& f) -> double {
        using F = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<F, Gompertz>) {
          if (f.alpha <= big_l) return 0.0;
          return -std::log1p(-big_l / f.alpha) / f.beta;
        } else if constexpr (std::is_same_v<F, GenGompertz>) {
          const double ab = f.A * f.b;
          if (ab <= big_l) return 0.0;
          return big_l * f.b / (ab - big_l);
        } else if constexpr (std::is_same_v<F, Logistic>) {
          const double den = f.C * (2.0 - c.rho) - j;
          if (den <= 0.0) return 0.0;
          return std::log((f.C - j) / den) / f.r;
        } else if constexpr (std::is_same_v<F, ModKorf>) {
          const double u = 1.0 - f.beta * big_l / f.alpha;
          if (u <= 0.0) return 0.0;
          return std::pow(u, -1.0 / f.beta) - 1.0;
        } else if constexpr (std::is_same_v<F, Korf>) {
          if (!(c.rho < 1.5)) return 0.0;
          return std::pow(f.alpha / (f.beta * std::log((2.0 - c.rho) / k)), 1.0 / f.beta);
        } else if constexpr (std::is_same_v<F, Mitscherlich>) {
          const double b2 = f.beta * (2.0 - c.rho);
          if (b2 <= j) return 0.0;
          return std::log(b2 / (b2 - j)) / f.alpha;
        } else {
          const double horizon = detail::settle_horizon(c);
          const auto t = detail::first_crossing_numeric(c, *m_star_opt, horizon, 20001);
          return t ? *t : 0.0;
        }
      },
      c.family);
}

/// Bracketing-only crossing time, for cross-checking the closed forms.
inline double crossing_time_curve_numeric(const GrowthCurve& c) {
  validate(c);
  const auto m_star = proportional::crossing_threshold(c.rho);
  if (!m_star) return 0.0;
  const double horizon = detail::settle_horizon(c);
  const auto t = detail::first_crossing_numeric(c, *m_star, horizon, 20001);
  return t ? *t : 0.0;
}

}  // namespace rumorbd::growth
