#pragma once

#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <memory>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "rumorbd/error.hpp"
#include "rumorbd/growth.hpp"
#include "rumorbd/parallel.hpp"
#include "rumorbd/proportional.hpp"

// Least-squares style fitting of the eight growth families to cumulative counts.
namespace rumorbd::fit {

/// Observed cumulative counts; t in days since the first observation.
struct Dataset {
  std::string name;
  std::vector<double> t;
  std::vector<double> y;

  std::size_t size() const { return t.size(); }

  void validate() const {
    if (t.empty() || t.size() != y.size()) throw DataError("dataset '" + name + "': empty or ragged");
    if (t.front() != 0.0) throw DataError("dataset '" + name + "': times must start at 0");
    if (!(y.front() >= 1.0)) throw DataError("dataset '" + name + "': first count must be >= 1");
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (!std::isfinite(t[i]) || !std::isfinite(y[i])) throw DataError("dataset '" + name + "': non-finite value");
      if (i > 0 && !(t[i] > t[i - 1])) throw DataError("dataset '" + name + "': times must be strictly increasing");
      if (i > 0 && y[i] < y[i - 1]) throw DataError("dataset '" + name + "': counts must be nondecreasing");
    }
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

inline double parse_number(const std::string& field, const std::string& where) {
  const std::string f = trim(field);
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(f, &used);
  } catch (const std::exception&) {
    throw DataError(where + ": not a number: '" + f + "'");
  }
  if (used != f.size()) throw DataError(where + ": not a number: '" + f + "'");
  return v;
}

}  // namespace detail

/// Reads CSV with a required `t,count` header. Lines starting with '#' are skipped.
inline Dataset read_dataset(std::istream& in, std::string name) {
  Dataset d;
  d.name = std::move(name);
  std::string line;
  bool header = false;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string s = detail::trim(line);
    if (s.empty() || s[0] == '#') continue;
    if (!header) {
      std::string h;
      for (char c : s) {
        if (c != ' ' && c != '\t') h += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      }
      if (h != "t,count") throw DataError(d.name + ": expected header 't,count', got '" + s + "'");
      header = true;
      continue;
    }
    const auto comma = s.find(',');
    if (comma == std::string::npos || s.find(',', comma + 1) != std::string::npos) {
      throw DataError(d.name + ":" + std::to_string(line_no) + ": expected two fields");
    }
    const std::string where = d.name + ":" + std::to_string(line_no);
    d.t.push_back(detail::parse_number(s.substr(0, comma), where));
    d.y.push_back(detail::parse_number(s.substr(comma + 1), where));
  }
  if (!header) throw DataError(d.name + ": missing 't,count' header");
  d.validate();
  return d;
}

inline Dataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  auto slash = path.find_last_of('/');
  std::string name = slash == std::string::npos ? path : path.substr(slash + 1);
  if (const auto dot = name.rfind('.'); dot != std::string::npos && dot > 0) name.resize(dot);
  return read_dataset(in, name);
}

/// rae_mean is the alternative RAE convention: mean of |residual| / |observed|.
enum class Objective { mse, rae, rae_mean };

inline std::string objective_name(Objective k) {
  switch (k) {
    case Objective::mse: return "mse";
    case Objective::rae: return "rae";
    case Objective::rae_mean: return "rae-mean";
  }
  return "?";
}

inline Objective parse_objective(const std::string& s) {
  if (s == "mse") return Objective::mse;
  if (s == "rae") return Objective::rae;
  if (s == "rae-mean") return Objective::rae_mean;
  throw DomainError("unknown objective '" + s + "' (expected mse, rae or rae-mean)");
}

/// MSE = mean squared residual; RAE = sum |residual| / sum |observed|.
/// Any non-finite curve value makes the objective +inf.
inline double objective(const growth::GrowthCurve& c, const Dataset& d, Objective kind) {
  if (d.size() == 0) throw DomainError("objective: empty dataset");
  double acc = 0.0;
  double denom = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double m = growth::eval_curve(c, d.t[i]);
    if (!std::isfinite(m)) return numeric::kInf;
    const double r = d.y[i] - m;
    if (kind == Objective::mse) {
      acc += r * r;
    } else if (kind == Objective::rae_mean) {
      if (d.y[i] == 0.0) throw DataError("objective: rae-mean needs nonzero observations");
      acc += std::abs(r / d.y[i]);
    } else {
      acc += std::abs(r);
      denom += std::abs(d.y[i]);
    }
  }
  if (kind != Objective::rae) return acc / static_cast<double>(d.size());
  if (!(denom > 0.0)) throw DataError("objective: RAE needs a nonzero observed total");
  return acc / denom;
}

enum class FamilyId { gompertz, gen_gompertz, logistic, ext_logistic, multisig, mod_korf, korf, mitscherlich };

inline const std::vector<FamilyId>& all_families() {
  static const std::vector<FamilyId> all{FamilyId::gompertz,     FamilyId::gen_gompertz, FamilyId::logistic,
                                         FamilyId::ext_logistic, FamilyId::multisig,     FamilyId::mod_korf,
                                         FamilyId::korf,         FamilyId::mitscherlich};
  return all;
}

inline std::string family_name(FamilyId f) {
  switch (f) {
    case FamilyId::gompertz: return "gompertz";
    case FamilyId::gen_gompertz: return "gen_gompertz";
    case FamilyId::logistic: return "logistic";
    case FamilyId::ext_logistic: return "ext_logistic";
    case FamilyId::multisig: return "multisig_logistic";
    case FamilyId::mod_korf: return "mod_korf";
    case FamilyId::korf: return "korf";
    case FamilyId::mitscherlich: return "mitscherlich";
  }
  return "?";
}

inline FamilyId parse_family(const std::string& s) {
  for (FamilyId f : all_families()) {
    if (family_name(f) == s) return f;
  }
  if (s == "multisig") return FamilyId::multisig;
  throw DomainError("unknown curve family '" + s + "'");
}

/// "all" or a comma separated list of family names.
inline std::vector<FamilyId> parse_families(const std::string& s) {
  if (s == "all") return all_families();
  std::vector<FamilyId> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = detail::trim(item);
    if (!item.empty()) out.push_back(parse_family(item));
  }
  return out;
}

/// How one parameter is searched. Internal coordinates are box-normalized:
/// u in [0, 1] spans [lo, hi] linearly, or log-uniformly when `log_scale`.
/// `sign` = -1 stores a negative parameter by its magnitude; `time_power` > 0
/// searches the coefficient of (t / T)^time_power instead of t^time_power.
struct ParamSpec {
  std::string name;
  double lo = 0.0;
  double hi = 1.0;
  bool log_scale = true;
  double sign = 1.0;
  int time_power = 0;
};

struct FitOptions {
  std::size_t restarts = 16;
  /// Objective evaluations per restart.
  std::size_t budget = 10000;
  std::uint64_t seed = 1;
  /// Free j instead of fixing it to the first observation.
  bool estimate_j = false;
  /// rho attached to X-family fits (their curves do not depend on it).
  double rho = 2.0;
  unsigned threads = 0;
  /// Simplex size (normalized coordinates) at which a restart counts as converged.
  double size_tol = 1e-10;
  /// Extra starting points in natural parameters, tried after the Latin-hypercube ones.
  std::vector<std::vector<double>> extra_starts;
};

struct FitResult {
  FamilyId family = FamilyId::gompertz;
  std::string name;
  bool ok = false;
  std::string error;
  growth::GrowthCurve curve;
  std::vector<std::string> param_names;
  std::vector<double> params;
  Objective kind = Objective::mse;
  double value = numeric::kInf;
  std::size_t iterations = 0;
  std::size_t evaluations = 0;
  std::size_t restarts = 0;
  std::size_t converged_restarts = 0;
  bool converged = false;
};

namespace detail {

struct Problem {
  FamilyId family;
  std::vector<ParamSpec> specs;
  double j_fixed;
  double t_span;
  double rho;
  bool estimate_j;
};

inline Problem make_problem(FamilyId f, const Dataset& d, const FitOptions& opt) {
  const double ymax = *std::max_element(d.y.begin(), d.y.end());
  const ParamSpec cap_box{"", ymax, 100.0 * ymax, true, 1.0, 0};
  auto cap = [&](const char* n) {
    ParamSpec s = cap_box;
    s.name = n;
    return s;
  };
  auto rate = [](const char* n) { return ParamSpec{n, 1e-3, 1e2, true, 1.0, 0}; };
  Problem p{f, {}, d.y.front(), d.t.back(), opt.rho, opt.estimate_j};
  switch (f) {
    case FamilyId::gompertz: p.specs = {rate("alpha"), rate("beta")}; break;
    case FamilyId::gen_gompertz: p.specs = {rate("A"), rate("b")}; break;
    case FamilyId::logistic: p.specs = {cap("C"), rate("r")}; break;
    case FamilyId::ext_logistic: p.specs = {cap("N"), {"eps", -0.99, 0.99, false, 1.0, 0}}; break;
    case FamilyId::multisig:
      p.specs = {cap("C"),
                 {"beta1", -10.0, 10.0, false, 1.0, 1},
                 {"beta2", -10.0, 10.0, false, 1.0, 2},
                 {"beta3", -10.0, 10.0, false, 1.0, 3},
                 {"beta4", 1e-3, 10.0, true, -1.0, 4}};
      break;
    case FamilyId::mod_korf: p.specs = {rate("alpha"), rate("beta")}; break;
    case FamilyId::korf: p.specs = {rate("alpha"), rate("beta"), cap("K")}; break;
    case FamilyId::mitscherlich: p.specs = {rate("alpha"), cap("beta")}; break;
  }
  if (opt.estimate_j) {
    const double y0 = d.y.front();
    p.specs.push_back({"j", 0.1 * y0, 10.0 * y0, true, 1.0, 0});
  }
  return p;
}

inline double time_scale(const Problem& p, const ParamSpec& s) {
  return s.time_power > 0 ? std::pow(std::max(p.t_span, 1e-12), s.time_power) : 1.0;
}

/// Normalized coordinate -> natural parameter value.
inline double to_natural(const Problem& p, const ParamSpec& s, double u) {
  const double v = s.log_scale ? std::exp(std::log(s.lo) + u * (std::log(s.hi) - std::log(s.lo)))
                               : s.lo + u * (s.hi - s.lo);
  return s.sign * v / time_scale(p, s);
}

inline double to_unit(const Problem& p, const ParamSpec& s, double x) {
  const double v = s.sign * x * time_scale(p, s);
  if (s.log_scale) {
    if (!(v > 0.0)) throw DomainError("fit: starting value outside the searchable domain for " + s.name);
    return (std::log(v) - std::log(s.lo)) / (std::log(s.hi) - std::log(s.lo));
  }
  return (v - s.lo) / (s.hi - s.lo);
}

/// Natural parameters -> curve. Korf carries its amplitude K = j / (rho - 1).
inline growth::GrowthCurve make_curve(const Problem& p, const std::vector<double>& x) {
  const double j = p.estimate_j ? x.back() : p.j_fixed;
  growth::GrowthCurve c;
  c.j = j;
  c.rho = p.rho;
  switch (p.family) {
    case FamilyId::gompertz: c.family = growth::Gompertz{x[0], x[1]}; break;
    case FamilyId::gen_gompertz: c.family = growth::GenGompertz{x[0], x[1]}; break;
    case FamilyId::logistic: c.family = growth::Logistic{x[0], x[1]}; break;
    case FamilyId::ext_logistic: c.family = growth::ExtLogistic{x[0], x[1]}; break;
    case FamilyId::multisig: c.family = growth::MultisigLogistic{x[0], {x[1], x[2], x[3], x[4]}}; break;
    case FamilyId::mod_korf: c.family = growth::ModKorf{x[0], x[1]}; break;
    case FamilyId::korf:
      c.family = growth::Korf{x[0], x[1]};
      c.rho = 1.0 + j / x[2];
      break;
    case FamilyId::mitscherlich: c.family = growth::Mitscherlich{x[0], x[1]}; break;
  }
  return c;
}

inline std::vector<double> natural_from_unit(const Problem& p, const double* u) {
  std::vector<double> x(p.specs.size());
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = to_natural(p, p.specs[i], u[i]);
  return x;
}

/// Objective at normalized coordinates; invalid parameters score +inf.
inline double score(const Problem& p, const Dataset& d, Objective kind, const double* u) {
  try {
    const auto c = make_curve(p, natural_from_unit(p, u));
    growth::validate(c);
    return objective(c, d, kind);
  } catch (const DomainError&) {
    return numeric::kInf;
  }
}

struct RestartOutcome {
  std::vector<double> u;
  double value = numeric::kInf;
  std::size_t iterations = 0;
  std::size_t evaluations = 0;
  bool converged = false;
};

struct GslContext {
  const Problem* problem;
  const Dataset* data;
  Objective kind;
  std::size_t evaluations;
};

// GSL rejects non-finite values, so +inf is replaced by a huge finite penalty.
inline double gsl_objective(const gsl_vector* v, void* params) {
  auto* ctx = static_cast<GslContext*>(params);
  ++ctx->evaluations;
  const double f = score(*ctx->problem, *ctx->data, ctx->kind, v->data);
  return std::isfinite(f) ? f : std::numeric_limits<double>::max() / 4.0;
}

inline void silence_gsl() {
  static const bool done = [] {
    gsl_set_error_handler_off();
    return true;
  }();
  (void)done;
}

/// Nelder-Mead (GSL nmsimplex2) from u0 with initial step 0.1; re-seeded at the
/// incumbent after each convergence until a restart no longer improves it.
inline RestartOutcome nelder_mead(const Problem& p, const Dataset& d, Objective kind, std::vector<double> u0,
                                  std::size_t budget, double size_tol) {
  silence_gsl();
  const std::size_t n = u0.size();
  GslContext ctx{&p, &d, kind, 0};
  gsl_multimin_function fn{&gsl_objective, n, &ctx};
  using Minimizer = std::unique_ptr<gsl_multimin_fminimizer, decltype(&gsl_multimin_fminimizer_free)>;
  using Vector = std::unique_ptr<gsl_vector, decltype(&gsl_vector_free)>;
  Minimizer s(gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, n), &gsl_multimin_fminimizer_free);
  Vector x(gsl_vector_alloc(n), &gsl_vector_free);
  Vector step(gsl_vector_alloc(n), &gsl_vector_free);
  if (!s || !x || !step) throw Error("fit: out of memory");

  RestartOutcome out;
  out.u = u0;
  out.value = score(p, d, kind, u0.data());
  for (int pass = 0; pass < 20 && ctx.evaluations < budget; ++pass) {
    for (std::size_t i = 0; i < n; ++i) gsl_vector_set(x.get(), i, out.u[i]);
    gsl_vector_set_all(step.get(), 0.1);
    if (gsl_multimin_fminimizer_set(s.get(), &fn, x.get(), step.get()) != GSL_SUCCESS) break;
    bool hit_tol = false;
    while (ctx.evaluations < budget) {
      ++out.iterations;
      if (gsl_multimin_fminimizer_iterate(s.get()) != GSL_SUCCESS) break;
      if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(s.get()), size_tol) == GSL_SUCCESS) {
        hit_tol = true;
        break;
      }
    }
    const double* best = gsl_multimin_fminimizer_x(s.get())->data;
    const double val = score(p, d, kind, best);
    const bool improved = val < out.value;
    if (improved) {
      out.value = val;
      out.u.assign(best, best + n);
    }
    out.converged = hit_tol;
    // a restart that lands on the same point confirms convergence
    if (!hit_tol || !improved || (out.value > 0.0 && out.value - val < 1e-14 * out.value)) break;
  }
  out.evaluations = ctx.evaluations;
  return out;
}

/// Latin-hypercube design on [0, 1]^dim.
inline std::vector<std::vector<double>> latin_hypercube(std::size_t count, std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<std::vector<double>> pts(count, std::vector<double>(dim));
  std::vector<std::size_t> perm(count);
  for (std::size_t k = 0; k < dim; ++k) {
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    for (std::size_t i = 0; i < count; ++i) {
      pts[i][k] = (static_cast<double>(perm[i]) + unif(rng)) / static_cast<double>(count);
    }
  }
  return pts;
}

}  // namespace detail

/// Parameter names in the order used by FitResult::params.
inline std::vector<std::string> parameter_names(FamilyId f, bool estimate_j = false) {
  Dataset dummy{"", {0.0, 1.0}, {1.0, 2.0}};
  FitOptions opt;
  opt.estimate_j = estimate_j;
  std::vector<std::string> names;
  for (const auto& s : detail::make_problem(f, dummy, opt).specs) names.push_back(s.name);
  return names;
}

/// Multi-start Nelder-Mead fit of one family. The best restart wins; ties go to
/// the lower restart index, so the result does not depend on the thread count.
inline FitResult fit_one(FamilyId family, const Dataset& d, Objective kind, const FitOptions& opt = {}) {
  d.validate();
  if (opt.restarts < 1 && opt.extra_starts.empty()) throw DomainError("fit: need at least one restart");
  if (opt.budget < 10) throw DomainError("fit: budget must be >= 10 evaluations");
  const auto p = detail::make_problem(family, d, opt);
  const std::size_t dim = p.specs.size();
  if (d.size() < dim + 1) {
    throw DomainError("fit: " + family_name(family) + " needs at least " + std::to_string(dim + 1) + " points");
  }
  auto starts = detail::latin_hypercube(opt.restarts, dim, opt.seed);
  for (const auto& e : opt.extra_starts) {
    if (e.size() != dim) throw DomainError("fit: extra start has the wrong number of parameters");
    std::vector<double> u(dim);
    for (std::size_t i = 0; i < dim; ++i) u[i] = detail::to_unit(p, p.specs[i], e[i]);
    starts.push_back(std::move(u));
  }

  std::vector<detail::RestartOutcome> runs(starts.size());
  parallel_for(starts.size(), opt.threads,
               [&](std::size_t i) { runs[i] = detail::nelder_mead(p, d, kind, starts[i], opt.budget, opt.size_tol); });

  FitResult r;
  r.family = family;
  r.name = family_name(family);
  r.kind = kind;
  r.restarts = runs.size();
  for (const auto& s : p.specs) r.param_names.push_back(s.name);
  std::size_t best = runs.size();
  for (std::size_t i = 0; i < runs.size(); ++i) {
    r.evaluations += runs[i].evaluations;
    r.iterations += runs[i].iterations;
    if (runs[i].converged) ++r.converged_restarts;
    if (std::isfinite(runs[i].value) && (best == runs.size() || runs[i].value < runs[best].value)) best = i;
  }
  if (best == runs.size()) {
    r.error = "all restarts diverged";
    return r;
  }
  r.params = detail::natural_from_unit(p, runs[best].u.data());
  r.curve = detail::make_curve(p, r.params);
  r.value = objective(r.curve, d, kind);
  r.converged = runs[best].converged;
  r.ok = true;
  return r;
}

struct SelectionReport {
  std::string dataset;
  Objective kind = Objective::mse;
  std::vector<FitResult> fits;
  /// Index into fits of the smallest objective among successful fits.
  std::optional<std::size_t> winner;
  std::string note;

  const FitResult* best() const { return winner ? &fits[*winner] : nullptr; }
};

/// Fits every requested family (in parallel) and ranks them. Failures stay in the table.
inline SelectionReport select_model(const Dataset& d, const std::vector<FamilyId>& families, Objective kind,
                                    const FitOptions& opt = {}) {
  if (families.empty()) throw DomainError("select_model: no families requested");
  d.validate();
  SelectionReport rep;
  rep.dataset = d.name;
  rep.kind = kind;
  rep.fits.resize(families.size());
  FitOptions inner = opt;
  inner.threads = 1;
  parallel_for(families.size(), opt.threads, [&](std::size_t i) {
    try {
      rep.fits[i] = fit_one(families[i], d, kind, inner);
    } catch (const DomainError& e) {
      rep.fits[i].family = families[i];
      rep.fits[i].name = family_name(families[i]);
      rep.fits[i].kind = kind;
      rep.fits[i].error = e.what();
    }
  });
  for (std::size_t i = 0; i < rep.fits.size(); ++i) {
    if (!rep.fits[i].ok) continue;
    if (!rep.winner || rep.fits[i].value < rep.fits[*rep.winner].value) rep.winner = i;
  }
  rep.note = "on series with several inflections the multisigmoidal logistic is expected to win";
  return rep;
}

struct Reconstruction {
  double rho = 1.0;
  std::vector<double> t;
  std::vector<double> m_y;
  std::vector<double> log_m_y;
  std::vector<bool> overflow;
};

/// m_Y(t) for each rho, from the fitted curve's M(t) under that rho.
/// X-families give M = log(m_X / j) / (rho - 1); Y-families invert the m_Y formula.
inline std::vector<Reconstruction> reconstruct_y(const FitResult& fit, const std::vector<double>& rho_values,
                                                 const std::vector<double>& grid) {
  if (!fit.ok) throw DomainError("reconstruct_y: fit failed: " + fit.error);
  const auto& c = fit.curve;
  const bool x_family = growth::target(c) == growth::Target::x;
  std::vector<Reconstruction> out;
  for (double rho : rho_values) {
    if (!(rho > 0.0) || !std::isfinite(rho)) throw DomainError("reconstruct_y: rho must be positive");
    if (x_family && !(rho > 1.0 && !proportional::detail::near_one(rho))) {
      throw DomainError("reconstruct_y: an X-family fit needs rho > 1 to define M(t)");
    }
    Reconstruction rec;
    rec.rho = rho;
    const double k = rho - 1.0;
    for (double t : grid) {
      if (!(t >= 0.0)) throw DomainError("reconstruct_y: grid times must be nonnegative");
      double big_m = 0.0;
      if (x_family) {
        big_m = (growth::log_eval(c, t) - std::log(c.j)) / k;
      } else {
        const double my = growth::eval_curve(c, t);
        const double z = k * my / c.j;
        if (z <= -1.0) throw DomainError("reconstruct_y: fitted m_Y exceeds j / (1 - rho)");
        big_m = proportional::detail::near_one(rho) ? my / c.j : std::log1p(z) / k;
      }
      if (big_m < 0.0) throw DomainError("reconstruct_y: fitted curve falls below its initial value");
      const auto rep = proportional::moments_prop(rho, big_m, c.j);
      rec.t.push_back(t);
      rec.log_m_y.push_back(rep.log_m_y);
      rec.m_y.push_back(rep.overflow ? numeric::kInf : rep.m_y);
      rec.overflow.push_back(rep.overflow);
    }
    out.push_back(std::move(rec));
  }
  return out;
}

}  // namespace rumorbd::fit
