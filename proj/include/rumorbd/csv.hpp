#pragma once

#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rumorbd/config.hpp"
#include "rumorbd/fit.hpp"
#include "rumorbd/oracle.hpp"
#include "rumorbd/process.hpp"
#include "rumorbd/report.hpp"

// CSV writers. Every file starts with "# rumorbd-csv v1 <schema>" and a column line;
// numbers use %.12g so output is stable across runs.
namespace rumorbd::csv {

inline constexpr int kVersion = 1;

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

inline void header(std::ostream& os, const std::string& schema, const std::string& columns) {
  os << "# rumorbd-csv v" << kVersion << ' ' << schema << '\n' << columns << '\n';
}

inline void write_trajectory(std::ostream& os, const Trajectory& tr) {
  header(os, "trajectory", "time,event,n,k");
  os << fmt(0.0) << ",start," << tr.initial_j << ",0\n";
  for (const auto& e : tr.events) {
    os << fmt(e.time) << ',' << (e.kind == EventKind::spread ? "spread" : "forget") << ',' << e.state.n << ','
       << e.state.k << '\n';
  }
}

inline void write_ensemble(std::ostream& os, const EnsembleStats& st) {
  header(os, "ensemble", "t,mean_x,var_x,mean_y,var_y,cov,corr,absorbed_frac,se_x,se_y,truncated_frac");
  for (std::size_t i = 0; i < st.grid.size(); ++i) {
    os << fmt(st.grid[i]) << ',' << fmt(st.mean_x[i]) << ',' << fmt(st.var_x[i]) << ',' << fmt(st.mean_y[i]) << ','
       << fmt(st.var_y[i]) << ',' << fmt(st.cov[i]) << ',' << fmt(st.corr[i]) << ',' << fmt(st.absorbed_frac[i])
       << ',' << fmt(st.se_x[i]) << ',' << fmt(st.se_y[i]) << ',' << fmt(st.truncated_frac[i]) << '\n';
  }
}

inline void write_moments(std::ostream& os, const std::vector<MomentReport>& rows) {
  header(os, "moments",
         "t,m_x,var_x,m_y,var_y,m2_y,m_xy,cov,corr,fano_x,fano_y,cv_x,cv_y,r_index,log_m_x,log_m_y,overflow");
  for (const auto& r : rows) {
    os << fmt(r.t) << ',' << fmt(r.m_x) << ',' << fmt(r.var_x) << ',' << fmt(r.m_y) << ',' << fmt(r.var_y) << ','
       << fmt(r.m2_y) << ',' << fmt(r.m_xy) << ',' << fmt(r.cov) << ',' << fmt(r.corr) << ',' << fmt(r.fano_x)
       << ',' << fmt(r.fano_y) << ',' << fmt(r.cv_x) << ',' << fmt(r.cv_y) << ',' << fmt(r.r_index) << ','
       << fmt(r.log_m_x) << ',' << fmt(r.log_m_y) << ',' << (r.overflow ? 1 : 0) << '\n';
  }
}

inline void write_absorption(std::ostream& os, const std::vector<double>& t, const std::vector<double>& p) {
  header(os, "absorption", "t,p_absorbed");
  for (std::size_t i = 0; i < t.size(); ++i) os << fmt(t[i]) << ',' << fmt(p[i]) << '\n';
}

/// States of S_j only; the leaked mass goes in a trailing comment.
inline void write_grid(std::ostream& os, const oracle::TruncatedGrid& g) {
  header(os, "oracle", "n,k,p");
  for (int n = 0; n <= g.n_max; ++n) {
    for (int k = std::max(0, g.j - n); k <= g.k_max; ++k) os << n << ',' << k << ',' << fmt(g.at(n, k)) << '\n';
  }
  os << "# leaked_mass=" << fmt(g.leaked_mass) << '\n';
}

inline std::string params_field(const fit::FitResult& f) {
  std::string s;
  for (std::size_t i = 0; i < f.params.size(); ++i) {
    if (i) s += ';';
    s += f.param_names[i] + '=' + fmt(f.params[i]);
  }
  return s;
}

inline void write_selection(std::ostream& os, const fit::SelectionReport& rep) {
  header(os, "selection", "dataset,family,objective,value,winner,ok,converged,restarts,evaluations,j,params,error");
  for (std::size_t i = 0; i < rep.fits.size(); ++i) {
    const auto& f = rep.fits[i];
    os << rep.dataset << ',' << f.name << ',' << fit::objective_name(rep.kind) << ',' << fmt(f.value) << ','
       << (rep.winner && *rep.winner == i ? 1 : 0) << ',' << (f.ok ? 1 : 0) << ',' << (f.converged ? 1 : 0) << ','
       << f.restarts << ',' << f.evaluations << ',' << (f.ok ? fmt(f.curve.j) : "") << ',' << params_field(f)
       << ',' << '"' << f.error << '"' << '\n';
  }
}

inline nlohmann::json fit_to_json(const fit::FitResult& f) {
  nlohmann::json j;
  j["family"] = f.name;
  j["ok"] = f.ok;
  j["objective"] = fit::objective_name(f.kind);
  j["value"] = f.ok ? nlohmann::json(f.value) : nlohmann::json(nullptr);
  j["converged"] = f.converged;
  j["restarts"] = f.restarts;
  j["converged_restarts"] = f.converged_restarts;
  j["iterations"] = f.iterations;
  j["evaluations"] = f.evaluations;
  if (f.ok) {
    j["curve"] = config::curve_to_json(f.curve);
    for (std::size_t i = 0; i < f.params.size(); ++i) j["params"][f.param_names[i]] = f.params[i];
  }
  if (!f.error.empty()) j["error"] = f.error;
  return j;
}

inline nlohmann::json selection_to_json(const fit::SelectionReport& rep) {
  nlohmann::json j;
  j["schema"] = "rumorbd-selection v1";
  j["dataset"] = rep.dataset;
  j["objective"] = fit::objective_name(rep.kind);
  j["fits"] = nlohmann::json::array();
  for (const auto& f : rep.fits) j["fits"].push_back(fit_to_json(f));
  j["winner"] = rep.best() ? nlohmann::json(rep.best()->name) : nlohmann::json(nullptr);
  j["note"] = rep.note;
  return j;
}

inline void write_reconstruction(std::ostream& os, const std::vector<fit::Reconstruction>& recs) {
  header(os, "reconstruction", "t,rho,m_y,log_m_y,overflow");
  for (const auto& r : recs) {
    for (std::size_t i = 0; i < r.t.size(); ++i) {
      os << fmt(r.t[i]) << ',' << fmt(r.rho) << ',' << fmt(r.m_y[i]) << ',' << fmt(r.log_m_y[i]) << ','
         << (r.overflow[i] ? 1 : 0) << '\n';
    }
  }
}

}  // namespace rumorbd::csv
