#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "rumorbd/error.hpp"
#include "rumorbd/parallel.hpp"
#include "rumorbd/rates.hpp"

// Exact simulation of (X(t), Y(t)): a spreader informs a new individual at rate
// lambda(t) and turns inactive at rate mu(t).
namespace rumorbd {

enum class EventKind { spread, forget };

struct State {
  std::int64_t n = 0;
  std::int64_t k = 0;
  friend bool operator==(const State&, const State&) = default;
};

struct TrajectoryEvent {
  double time = 0.0;
  EventKind kind = EventKind::spread;
  State state;
};

struct Trajectory {
  int initial_j = 1;
  std::vector<TrajectoryEvent> events;
  bool absorbed = false;
  /// The population cap was reached before the horizon.
  bool truncated = false;
  double horizon = 0.0;

  State state_at(double t) const {
    State s{initial_j, 0};
    for (const auto& e : events) {
      if (e.time > t) break;
      s = e.state;
    }
    return s;
  }
  State final_state() const { return events.empty() ? State{initial_j, 0} : events.back().state; }
};

struct SimulationOptions {
  std::int64_t cap = 1'000'000;
};

/// Independent generator for replicate `replicate` of a run seeded with `seed`.
inline std::mt19937_64 replicate_rng(std::uint64_t seed, std::uint64_t replicate) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(replicate), static_cast<std::uint32_t>(replicate >> 32)};
  return std::mt19937_64(seq);
}

namespace detail {

inline double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline double exp_variate(std::mt19937_64& rng, double rate) { return -std::log1p(-uniform01(rng)) / rate; }

struct RunOutcome {
  State state;
  bool absorbed = false;
  bool truncated = false;
};

/// Runs one realization on [0, horizon] and calls on_event(time, kind, new_state)
/// for every jump. Constant rates use the exponential clock directly; otherwise
/// events are thinned against n * sup(lambda + mu) over adaptive windows.
template <class OnEvent>
RunOutcome run_process(const RateFamily& rates, int j, double horizon, std::int64_t cap, std::mt19937_64& rng,
                       OnEvent&& on_event) {
  State s{j, 0};
  double t = 0.0;
  auto apply = [&](double when, bool spread) {
    if (spread) {
      ++s.n;
    } else {
      --s.n;
      ++s.k;
    }
    on_event(when, spread ? EventKind::spread : EventKind::forget, s);
  };

  if (const auto* c = std::get_if<Constant>(&rates.kind())) {
    const double total = c->lambda + c->mu;
    const double p_spread = c->lambda / total;
    while (s.n > 0) {
      if (s.n >= cap) return {s, false, true};
      t += exp_variate(rng, static_cast<double>(s.n) * total);
      if (t > horizon) break;
      apply(t, uniform01(rng) < p_spread);
    }
    return {s, s.n == 0, false};
  }

  double window = 1.0 / std::max(rates.lambda(0.0) + rates.mu(0.0), 1e-3);
  const double min_window = 1e-9 * std::max(1.0, horizon);
  while (s.n > 0) {
    if (s.n >= cap) return {s, false, true};
    if (t >= horizon) break;
    double w_end = std::min(t + window, horizon);
    double bound = rates.sup_total(t, w_end);
    // A loose bound wastes draws; shrink only while that actually tightens it.
    while (window > min_window && bound > 0.0 && (rates.lambda(t) + rates.mu(t)) / bound < 0.2) {
      const double half_end = std::min(t + 0.5 * window, horizon);
      const double half = rates.sup_total(t, half_end);
      if (!(half < 0.7 * bound)) break;
      window *= 0.5;
      w_end = half_end;
      bound = half;
    }
    if (!(bound > 0.0)) {
      t = w_end;
      window *= 2.0;
      continue;
    }
    const double cand = t + exp_variate(rng, static_cast<double>(s.n) * bound);
    if (cand >= w_end) {
      t = w_end;
      window *= 2.0;
      continue;
    }
    const double l = rates.lambda(cand);
    const double total = l + rates.mu(cand);
    if (total > bound * (1.0 + 1e-12)) {
      // Bound violated: discard the draw and retry from t with a shorter window.
      if (window <= min_window) throw Error("simulate: sup_total does not dominate lambda + mu");
      window *= 0.5;
      continue;
    }
    t = cand;
    const double u = uniform01(rng) * bound;
    if (u < total) apply(t, u < l);
  }
  return {s, s.n == 0, false};
}

}  // namespace detail

/// One realization started from (j, 0). Stops at absorption, at the horizon, or
/// when the number of spreaders reaches cap (flagged as truncated).
inline Trajectory simulate(const RateFamily& rates, int j, double horizon, std::uint64_t seed,
                           SimulationOptions opt = {}, std::uint64_t replicate = 0) {
  if (j < 1) throw DomainError("simulate: j must be >= 1");
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw DomainError("simulate: horizon must be positive");
  if (opt.cap < j) throw DomainError("simulate: cap must be >= j");
  Trajectory tr;
  tr.initial_j = j;
  tr.horizon = horizon;
  auto rng = replicate_rng(seed, replicate);
  const auto out = detail::run_process(rates, j, horizon, opt.cap, rng, [&](double t, EventKind kind, State s) {
    tr.events.push_back({t, kind, s});
  });
  tr.absorbed = out.absorbed;
  tr.truncated = out.truncated;
  return tr;
}

/// Running first and second order sums for (X, Y), mergeable in a fixed order.
struct PairAccumulator {
  double count = 0.0;
  double mean_x = 0.0;
  double mean_y = 0.0;
  double m2_x = 0.0;
  double m2_y = 0.0;
  double c_xy = 0.0;
  double absorbed = 0.0;
  double truncated = 0.0;

  void add(double x, double y, bool is_absorbed, bool is_truncated) {
    count += 1.0;
    const double dx = x - mean_x;
    const double dy = y - mean_y;
    mean_x += dx / count;
    mean_y += dy / count;
    m2_x += dx * (x - mean_x);
    m2_y += dy * (y - mean_y);
    c_xy += dx * (y - mean_y);
    absorbed += is_absorbed ? 1.0 : 0.0;
    truncated += is_truncated ? 1.0 : 0.0;
  }

  void merge(const PairAccumulator& o) {
    if (o.count == 0.0) return;
    if (count == 0.0) {
      *this = o;
      return;
    }
    const double n = count + o.count;
    const double dx = o.mean_x - mean_x;
    const double dy = o.mean_y - mean_y;
    const double w = count * o.count / n;
    mean_x += dx * o.count / n;
    mean_y += dy * o.count / n;
    m2_x += o.m2_x + dx * dx * w;
    m2_y += o.m2_y + dy * dy * w;
    c_xy += o.c_xy + dx * dy * w;
    absorbed += o.absorbed;
    truncated += o.truncated;
    count = n;
  }
};

struct EnsembleStats {
  std::size_t replicate_count = 0;
  std::vector<double> grid;
  std::vector<double> mean_x, var_x, mean_y, var_y, cov, corr;
  std::vector<double> absorbed_frac;
  std::vector<double> se_x, se_y;
  /// Share of replicates that hit the population cap by each grid time.
  std::vector<double> truncated_frac;
};

struct EnsembleOptions {
  std::int64_t cap = 1'000'000;
  /// 0 means: RUMORBD_THREADS if set, otherwise hardware concurrency.
  unsigned threads = 0;
};

/// Monte Carlo statistics over independent replicates, sampled on `grid`.
/// Replicates are reduced in fixed blocks merged in index order, so the result
/// depends only on the inputs and the seed.
inline EnsembleStats ensemble(const RateFamily& rates, int j, double horizon, const std::vector<double>& grid,
                              std::size_t replicates, std::uint64_t seed, EnsembleOptions opt = {}) {
  if (j < 1) throw DomainError("ensemble: j must be >= 1");
  if (replicates < 1) throw DomainError("ensemble: replicates must be >= 1");
  if (!(horizon > 0.0)) throw DomainError("ensemble: horizon must be positive");
  if (opt.cap < j) throw DomainError("ensemble: cap must be >= j");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] >= 0.0 && grid[i] <= horizon)) throw DomainError("ensemble: grid must lie within [0, horizon]");
    if (i > 0 && grid[i] < grid[i - 1]) throw DomainError("ensemble: grid must be sorted");
  }
  const std::size_t g = grid.size();
  constexpr std::size_t block = 1024;
  const std::size_t n_blocks = (replicates + block - 1) / block;
  std::vector<std::vector<PairAccumulator>> partial(n_blocks, std::vector<PairAccumulator>(g));

  auto run_block = [&](std::size_t b) {
    auto& acc = partial[b];
    std::vector<State> at(g);
    const std::size_t lo = b * block;
    const std::size_t hi = std::min(replicates, lo + block);
    for (std::size_t rep = lo; rep < hi; ++rep) {
      auto rng = replicate_rng(seed, rep);
      State cur{j, 0};
      std::size_t next = 0;
      const auto out = detail::run_process(rates, j, horizon, opt.cap, rng, [&](double t, EventKind, State s) {
        while (next < g && grid[next] < t) at[next++] = cur;
        cur = s;
      });
      const std::size_t first_after = next;
      while (next < g) at[next++] = cur;
      for (std::size_t i = 0; i < g; ++i) {
        const bool absorbed = at[i].n == 0;
        const bool truncated = out.truncated && i >= first_after;
        acc[i].add(static_cast<double>(at[i].n), static_cast<double>(at[i].k), absorbed, truncated);
      }
    }
  };

  parallel_for(n_blocks, opt.threads, run_block);

  EnsembleStats st;
  st.replicate_count = replicates;
  st.grid = grid;
  for (std::size_t i = 0; i < g; ++i) {
    PairAccumulator total;
    for (std::size_t b = 0; b < n_blocks; ++b) total.merge(partial[b][i]);
    const double n = total.count;
    const double vx = n > 1.0 ? total.m2_x / (n - 1.0) : 0.0;
    const double vy = n > 1.0 ? total.m2_y / (n - 1.0) : 0.0;
    const double cv = n > 1.0 ? total.c_xy / (n - 1.0) : 0.0;
    st.mean_x.push_back(total.mean_x);
    st.mean_y.push_back(total.mean_y);
    st.var_x.push_back(vx);
    st.var_y.push_back(vy);
    st.cov.push_back(cv);
    st.corr.push_back(vx > 0.0 && vy > 0.0 ? cv / std::sqrt(vx * vy) : numeric::kNaN);
    st.absorbed_frac.push_back(total.absorbed / n);
    st.truncated_frac.push_back(total.truncated / n);
    st.se_x.push_back(std::sqrt(vx / n));
    st.se_y.push_back(std::sqrt(vy / n));
  }
  return st;
}

}  // namespace rumorbd
