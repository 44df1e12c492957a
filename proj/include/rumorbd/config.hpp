#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rumorbd/error.hpp"
#include "rumorbd/growth.hpp"
#include "rumorbd/numeric.hpp"
#include "rumorbd/rates.hpp"

// Rate family and growth curve specs: JSON objects, a few "kind:a,b" shorthands,
// or a path to a JSON file. Grids are "start:end:steps".
namespace rumorbd::config {

using json = nlohmann::json;

namespace detail {

inline double num(const json& j, const char* key) {
  if (!j.contains(key)) throw DomainError(std::string("spec: missing field '") + key + "'");
  if (!j.at(key).is_number()) throw DomainError(std::string("spec: field '") + key + "' must be a number");
  return j.at(key).get<double>();
}

inline double num_or(const json& j, const char* key, double fallback) {
  return j.contains(key) ? num(j, key) : fallback;
}

inline std::string str(const json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_string()) {
    throw DomainError(std::string("spec: missing string field '") + key + "'");
  }
  return j.at(key).get<std::string>();
}

inline std::vector<double> split_numbers(const std::string& s, const std::string& what) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    try {
      out.push_back(std::stod(item, &used));
    } catch (const std::exception&) {
      throw DomainError(what + ": not a number: '" + item + "'");
    }
    if (used != item.size()) throw DomainError(what + ": not a number: '" + item + "'");
  }
  return out;
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw DataError(path + ": " + e.what());
  }
}

/// Inline JSON, or a file path holding JSON.
inline json load_spec(const std::string& spec) {
  if (!spec.empty() && spec.front() == '{') {
    try {
      return json::parse(spec);
    } catch (const json::parse_error& e) {
      throw DomainError(std::string("spec: ") + e.what());
    }
  }
  if (std::filesystem::exists(spec)) return read_json_file(spec);
  throw DomainError("spec: '" + spec + "' is neither JSON, a known shorthand nor an existing file");
}

}  // namespace detail

/// {"family":"gompertz","alpha":3,"beta":2,"j":1,"rho":1.5}; multisig takes "C" and "beta":[b1,b2,b3,b4].
inline growth::GrowthCurve curve_from_json(const json& j) {
  using namespace growth;
  using detail::num;
  const std::string fam = detail::str(j, "family");
  GrowthCurve c;
  c.j = detail::num_or(j, "j", 1.0);
  c.rho = detail::num_or(j, "rho", 2.0);
  if (fam == "gompertz") {
    c.family = Gompertz{num(j, "alpha"), num(j, "beta")};
  } else if (fam == "gen_gompertz") {
    c.family = GenGompertz{num(j, "A"), num(j, "b")};
  } else if (fam == "logistic") {
    c.family = Logistic{num(j, "C"), num(j, "r")};
  } else if (fam == "ext_logistic") {
    c.family = ExtLogistic{num(j, "N"), num(j, "eps")};
  } else if (fam == "multisig_logistic" || fam == "multisig") {
    if (!j.contains("beta") || !j.at("beta").is_array() || j.at("beta").size() != 4) {
      throw DomainError("spec: multisig_logistic needs \"beta\": [b1, b2, b3, b4]");
    }
    MultisigLogistic m{num(j, "C"), {}};
    for (std::size_t i = 0; i < 4; ++i) {
      if (!j.at("beta")[i].is_number()) throw DomainError("spec: multisig beta entries must be numbers");
      m.beta[i] = j.at("beta")[i].get<double>();
    }
    c.family = m;
  } else if (fam == "mod_korf") {
    c.family = ModKorf{num(j, "alpha"), num(j, "beta")};
  } else if (fam == "korf") {
    c.family = Korf{num(j, "alpha"), num(j, "beta")};
  } else if (fam == "mitscherlich") {
    c.family = Mitscherlich{num(j, "alpha"), num(j, "beta")};
  } else {
    throw DomainError("spec: unknown curve family '" + fam + "'");
  }
  validate(c);
  return c;
}

inline json curve_to_json(const growth::GrowthCurve& c) {
  using namespace growth;
  json j;
  j["family"] = family_name(c);
  std::visit(
      [&](const auto& f) {
        using F = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<F, GenGompertz>) {
          j["A"] = f.A;
          j["b"] = f.b;
        } else if constexpr (std::is_same_v<F, Logistic>) {
          j["C"] = f.C;
          j["r"] = f.r;
        } else if constexpr (std::is_same_v<F, ExtLogistic>) {
          j["N"] = f.N;
          j["eps"] = f.eps;
        } else if constexpr (std::is_same_v<F, MultisigLogistic>) {
          j["C"] = f.C;
          j["beta"] = f.beta;
        } else {
          j["alpha"] = f.alpha;
          j["beta"] = f.beta;
        }
      },
      c.family);
  j["j"] = c.j;
  j["rho"] = c.rho;
  return j;
}

inline MuBase mu_base_from_json(const json& j) {
  const std::string kind = detail::str(j, "kind");
  if (kind == "constant") return ConstantMu{detail::num(j, "mu")};
  if (kind == "cosine") return CosineMu{detail::num(j, "mu"), detail::num(j, "alpha"), detail::num(j, "Q")};
  if (kind == "curve") return CurveInduced{curve_from_json(j.contains("curve") ? j.at("curve") : j)};
  throw DomainError("spec: unknown base kind '" + kind + "'");
}

/// {"kind":"constant","lambda":1,"mu":1}
/// {"kind":"proportional","rho":1.5,"base":{"kind":"cosine","mu":1.0,"alpha":0.5,"Q":2.5}}
/// {"family":"gompertz",...} (curve-induced rates); optional "method":"quadrature".
inline RateFamily rates_from_json(const json& j) {
  if (!j.is_object()) throw DomainError("spec: rates must be a JSON object");
  IntegralMethod method = IntegralMethod::analytic;
  if (j.contains("method")) {
    const std::string m = detail::str(j, "method");
    if (m == "quadrature") {
      method = IntegralMethod::adaptive_quadrature;
    } else if (m != "analytic") {
      throw DomainError("spec: method must be analytic or quadrature");
    }
  }
  if (j.contains("family")) {
    const auto c = curve_from_json(j);
    if (method == IntegralMethod::analytic) return RateFamily::from_curve(c);
    return RateFamily::proportional(c.rho, CurveInduced{c}, method);
  }
  const std::string kind = detail::str(j, "kind");
  if (kind == "constant") return RateFamily(Constant{detail::num(j, "lambda"), detail::num(j, "mu")}, method);
  if (kind == "proportional") {
    if (!j.contains("base")) throw DomainError("spec: proportional rates need a \"base\"");
    return RateFamily::proportional(detail::num(j, "rho"), mu_base_from_json(j.at("base")), method);
  }
  throw DomainError("spec: unknown rates kind '" + kind + "'");
}

/// Shorthands: constant:lambda,mu | proportional:rho,mu | cosine:rho,mu,alpha,Q.
inline RateFamily parse_rates(const std::string& spec) {
  const auto colon = spec.find(':');
  if (colon != std::string::npos && spec.front() != '{') {
    const std::string kind = spec.substr(0, colon);
    const auto v = detail::split_numbers(spec.substr(colon + 1), "rates " + kind);
    auto need = [&](std::size_t n) {
      if (v.size() != n) throw DomainError("rates " + kind + ": expected " + std::to_string(n) + " numbers");
    };
    if (kind == "constant") {
      need(2);
      return RateFamily::constant(v[0], v[1]);
    }
    if (kind == "proportional") {
      need(2);
      return RateFamily::proportional(v[0], ConstantMu{v[1]});
    }
    if (kind == "cosine") {
      need(4);
      return RateFamily::proportional(v[0], CosineMu{v[1], v[2], v[3]});
    }
  }
  return rates_from_json(detail::load_spec(spec));
}

inline growth::GrowthCurve parse_curve(const std::string& spec) { return curve_from_json(detail::load_spec(spec)); }

/// "start:end:steps" -> steps equally spaced points, end included.
inline std::vector<double> parse_grid(const std::string& spec) {
  std::vector<std::string> parts;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ':')) parts.push_back(item);
  if (parts.size() != 3) throw DomainError("grid: expected start:end:steps, got '" + spec + "'");
  const auto a = detail::split_numbers(parts[0], "grid");
  const auto b = detail::split_numbers(parts[1], "grid");
  const auto n = detail::split_numbers(parts[2], "grid");
  if (a.size() != 1 || b.size() != 1 || n.size() != 1) throw DomainError("grid: expected start:end:steps");
  if (!(a[0] >= 0.0) || !(b[0] > a[0])) throw DomainError("grid: need 0 <= start < end");
  if (!(n[0] >= 2.0) || n[0] != std::floor(n[0]) || n[0] > 1e8) throw DomainError("grid: steps must be an integer >= 2");
  return numeric::linspace(a[0], b[0], static_cast<std::size_t>(n[0]));
}

}  // namespace rumorbd::config
