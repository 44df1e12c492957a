#pragma once

#include <CLI11.hpp>

#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "rumorbd/rumorbd.hpp"

namespace rumorbd::cli {

enum ExitCode : int { ok = 0, usage = 2, numeric_failure = 3, data_error = 4 };

namespace detail {

inline void emit(const std::string& path, std::ostream& out, const std::function<void(std::ostream&)>& write) {
  if (path.empty() || path == "-") {
    write(out);
    return;
  }
  std::ofstream f(path);
  if (!f) throw DataError("cannot write " + path);
  write(f);
  if (!f) throw DataError("write failed: " + path);
}

inline std::vector<double> parse_list(const std::string& s) {
  std::vector<double> v;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    try {
      v.push_back(std::stod(item, &used));
    } catch (const std::exception&) {
      throw DomainError("not a number: '" + item + "'");
    }
    if (used != item.size()) throw DomainError("not a number: '" + item + "'");
  }
  if (v.empty()) throw DomainError("empty list");
  return v;
}

struct Common {
  std::string rates;
  int j = 1;
  std::string grid;
  std::string out = "-";
};

inline void add_rates(CLI::App* c, Common& o) {
  c->add_option("--rates", o.rates,
                "rate family: constant:L,M | proportional:RHO,MU | cosine:RHO,MU,ALPHA,Q | JSON | JSON file")
      ->required();
  c->add_option("--j", o.j, "initial number of spreaders")->check(CLI::PositiveNumber);
  c->add_option("--out", o.out, "output file ('-' = stdout)");
}

}  // namespace detail

/// Runs the command line; returns the process exit code.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{
      "rumorbd: spreader/inactive birth-death model of rumor diffusion.\n"
      "Option precedence: command-line flags > --config file (TOML, one [subcommand] table) > defaults.\n"
      "RUMORBD_THREADS caps worker threads. Exit codes: 0 ok, 2 usage, 3 numeric failure, 4 data error."};
  app.set_config("--config", "", "TOML file with option values");
  app.require_subcommand(1);
  app.fallthrough();
  unsigned threads = 0;
  app.add_option("--threads", threads, "worker threads (0 = RUMORBD_THREADS or all cores)");

  // simulate
  detail::Common sim;
  double horizon = 10.0;
  std::size_t replicates = 1000;
  std::uint64_t seed = 42;
  std::int64_t cap = 1'000'000;
  bool trajectory = false;
  auto* c_sim = app.add_subcommand("simulate", "Monte Carlo ensemble (or one trajectory) from (j, 0)");
  detail::add_rates(c_sim, sim);
  c_sim->add_option("--horizon", horizon, "simulated time span")->check(CLI::PositiveNumber);
  c_sim->add_option("--replicates", replicates, "number of replicates")->check(CLI::PositiveNumber);
  c_sim->add_option("--seed", seed, "base seed");
  c_sim->add_option("--grid", sim.grid, "sampling grid start:end:steps (default 0:horizon:51)");
  c_sim->add_option("--cap", cap, "spreader cap; runs reaching it are flagged truncated");
  c_sim->add_flag("--trajectory", trajectory, "write the event list of replicate 0 instead of ensemble statistics");

  // moments
  detail::Common mom;
  mom.grid = "0:10:101";
  auto* c_mom = app.add_subcommand("moments", "closed-form conditional moments over a grid");
  detail::add_rates(c_mom, mom);
  c_mom->add_option("--grid", mom.grid, "time grid start:end:steps");

  // absorb
  detail::Common abs;
  abs.grid = "0:10:101";
  auto* c_abs = app.add_subcommand("absorb", "absorption probability P(X(t) = 0) over a grid");
  detail::add_rates(c_abs, abs);
  c_abs->add_option("--grid", abs.grid, "time grid start:end:steps");

  // oracle
  detail::Common orc;
  double orc_t = 1.0;
  int n_max = 60;
  int k_max = 60;
  double leak_tol = 1e-4;
  auto* c_orc = app.add_subcommand("oracle", "transition probabilities from the truncated forward equations");
  detail::add_rates(c_orc, orc);
  c_orc->add_option("--t", orc_t, "time")->check(CLI::NonNegativeNumber);
  c_orc->add_option("--n-max", n_max, "largest spreader count kept");
  c_orc->add_option("--k-max", k_max, "largest inactive count kept");
  c_orc->add_option("--leak-tolerance", leak_tol, "maximum probability allowed to leave the box");

  // fit
  std::vector<std::string> data;
  std::string objective = "mse";
  std::string families = "all";
  fit::FitOptions fopt;
  std::string fit_out = "-";
  std::string fit_json;
  auto* c_fit = app.add_subcommand("fit", "fit growth curves to t,count series and pick the best family");
  c_fit->add_option("--data", data, "CSV files with header t,count")->required();
  c_fit->add_option("--objective", objective, "mse | rae | rae-mean");
  c_fit->add_option("--families", families, "'all' or a comma separated list");
  c_fit->add_option("--restarts", fopt.restarts, "Latin-hypercube restarts per family")->check(CLI::PositiveNumber);
  c_fit->add_option("--budget", fopt.budget, "objective evaluations per restart");
  c_fit->add_option("--seed", fopt.seed, "seed of the restart design");
  c_fit->add_flag("--estimate-j", fopt.estimate_j, "fit j instead of fixing it to the first count");
  c_fit->add_option("--out", fit_out, "selection CSV ('-' = stdout)");
  c_fit->add_option("--json", fit_json, "also write the selection report as JSON");

  // reconstruct-y
  std::string rec_data;
  std::string rec_curve;
  std::string rec_family;
  std::string rec_rho = "1.5,2,3";
  std::string rec_grid;
  std::string rec_out = "-";
  std::string rec_objective = "mse";
  fit::FitOptions ropt;
  auto* c_rec = app.add_subcommand("reconstruct-y", "m_Y(t) implied by a fitted curve for several rho");
  auto* o_data = c_rec->add_option("--data", rec_data, "CSV with header t,count (fitted first)");
  auto* o_curve = c_rec->add_option("--curve", rec_curve, "curve spec (JSON or JSON file) instead of fitting");
  o_data->excludes(o_curve);
  c_rec->add_option("--family", rec_family, "family to fit; default: the best under --objective");
  c_rec->add_option("--objective", rec_objective, "mse | rae | rae-mean");
  c_rec->add_option("--rho", rec_rho, "comma separated rho values");
  c_rec->add_option("--grid", rec_grid, "time grid start:end:steps (default: the data span, 101 steps)");
  c_rec->add_option("--restarts", ropt.restarts, "Latin-hypercube restarts")->check(CLI::PositiveNumber);
  c_rec->add_option("--budget", ropt.budget, "objective evaluations per restart");
  c_rec->add_option("--seed", ropt.seed, "seed of the restart design");
  c_rec->add_option("--out", rec_out, "output file ('-' = stdout)");

  try {
    try {
      app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
      std::ostringstream o, e2;
      const int code = app.exit(e, o, e2);
      out << o.str();
      err << e2.str();
      return code == 0 ? ok : usage;
    }

    if (c_sim->parsed()) {
      const auto rates = config::parse_rates(sim.rates);
      if (trajectory) {
        SimulationOptions so;
        so.cap = cap;
        const auto tr = simulate(rates, sim.j, horizon, seed, so, 0);
        detail::emit(sim.out, out, [&](std::ostream& os) { csv::write_trajectory(os, tr); });
      } else {
        const auto grid = sim.grid.empty() ? numeric::linspace(0.0, horizon, 51) : config::parse_grid(sim.grid);
        EnsembleOptions eo;
        eo.cap = cap;
        eo.threads = threads;
        const auto st = ensemble(rates, sim.j, horizon, grid, replicates, seed, eo);
        detail::emit(sim.out, out, [&](std::ostream& os) { csv::write_ensemble(os, st); });
      }
    } else if (c_mom->parsed()) {
      const auto rates = config::parse_rates(mom.rates);
      const auto rows = moment_grid(rates, mom.j, config::parse_grid(mom.grid));
      detail::emit(mom.out, out, [&](std::ostream& os) { csv::write_moments(os, rows); });
    } else if (c_abs->parsed()) {
      const auto rates = config::parse_rates(abs.rates);
      const auto grid = config::parse_grid(abs.grid);
      std::vector<double> p;
      for (double t : grid) p.push_back(absorption_probability(rates, abs.j, t));
      detail::emit(abs.out, out, [&](std::ostream& os) { csv::write_absorption(os, grid, p); });
    } else if (c_orc->parsed()) {
      const auto rates = config::parse_rates(orc.rates);
      oracle::StepControl ctl;
      ctl.leak_tolerance = leak_tol;
      const auto g = oracle::solve_forward(rates, orc.j, orc_t, n_max, k_max, ctl);
      detail::emit(orc.out, out, [&](std::ostream& os) { csv::write_grid(os, g); });
    } else if (c_fit->parsed()) {
      const auto kind = fit::parse_objective(objective);
      const auto fams = fit::parse_families(families);
      fopt.threads = threads;
      std::vector<fit::SelectionReport> reports;
      for (const auto& path : data) reports.push_back(fit::select_model(fit::load_dataset(path), fams, kind, fopt));
      detail::emit(fit_out, out, [&](std::ostream& os) {
        for (std::size_t i = 0; i < reports.size(); ++i) {
          std::ostringstream one;
          csv::write_selection(one, reports[i]);
          std::string s = one.str();
          // a single header for the concatenated table
          if (i > 0) s = s.substr(s.find('\n', s.find('\n') + 1) + 1);
          os << s;
        }
      });
      if (!fit_json.empty()) {
        nlohmann::json j = nlohmann::json::array();
        for (const auto& r : reports) j.push_back(csv::selection_to_json(r));
        detail::emit(fit_json, out, [&](std::ostream& os) { os << j.dump(2) << '\n'; });
      }
    } else if (c_rec->parsed()) {
      const auto rhos = detail::parse_list(rec_rho);
      fit::FitResult chosen;
      double t_end = 10.0;
      if (!rec_curve.empty()) {
        chosen.ok = true;
        chosen.curve = config::parse_curve(rec_curve);
        chosen.name = growth::family_name(chosen.curve);
      } else if (!rec_data.empty()) {
        const auto d = fit::load_dataset(rec_data);
        const auto kind = fit::parse_objective(rec_objective);
        ropt.threads = threads;
        const auto fams = rec_family.empty() ? fit::all_families() : fit::parse_families(rec_family);
        const auto rep = fit::select_model(d, fams, kind, ropt);
        if (!rep.best()) throw Error("reconstruct-y: no family could be fitted");
        chosen = *rep.best();
        t_end = d.t.back();
        err << "reconstruct-y: using " << chosen.name << " (" << fit::objective_name(kind) << " "
            << csv::fmt(chosen.value) << ")\n";
      } else {
        throw DomainError("reconstruct-y: give --data or --curve");
      }
      const auto grid = rec_grid.empty() ? numeric::linspace(0.0, t_end, 101) : config::parse_grid(rec_grid);
      const auto recs = fit::reconstruct_y(chosen, rhos, grid);
      detail::emit(rec_out, out, [&](std::ostream& os) { csv::write_reconstruction(os, recs); });
    }
    return ok;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return data_error;
  } catch (const DomainError& e) {
    err << "usage error: " << e.what() << '\n';
    return usage;
  } catch (const TruncationError& e) {
    err << "numeric failure: " << e.what() << " (leaked " << e.leaked_mass() << ")\n";
    return numeric_failure;
  } catch (const Error& e) {
    err << "numeric failure: " << e.what() << '\n';
    return numeric_failure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return numeric_failure;
  }
}

}  // namespace rumorbd::cli
