#pragma once

#include <algorithm>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "fxmm/autocorrelation.hpp"
#include "fxmm/errors.hpp"
#include "fxmm/hamiltonians.hpp"
#include "fxmm/model_params.hpp"
#include "fxmm/strategy_table.hpp"

namespace fxmm {

struct SimConfig {
  ModelParams params;
  StrategyTable strategy;
  double horizon = 10.0;   // days
  double step = 1e-5;      // days
  std::size_t n_paths = 1000;
  std::uint64_t seed = 1;
  double initial_inventory = 0.0;  // M€
  double initial_price = 1.0;      // S0; cash is tracked in S0 units so P&L comes out in bps·M€
  double burn_in_fraction = 0.1;
  bool compute_acf = true;
  std::size_t acf_stride = 10;     // steps between inventory samples
  std::size_t acf_max_lag = 5000;  // in samples
  bool record_events = false;
  std::size_t event_paths = 1;     // paths whose step log is kept when record_events is set
  unsigned threads = 1;
};

/// One simulation step of one path, enough to rebuild the P&L by hand.
struct StepEvent {
  std::size_t path = 0;
  std::size_t step = 0;
  double price_before = 0.0;     // S/S0 at which fills and the hedge trade
  double price_after = 0.0;      // after impact and diffusion
  double inventory_after = 0.0;  // held through the price move
  double fill_margin = 0.0;      // Σ z S δ over the step's fills, bps·M€
  double hedge_rate = 0.0;       // applied rate after boundary clamping, M€/day
  double execution_cost = 0.0;   // L(v) S step, bps·M€
  int fills = 0;
};

struct PathRecord {
  double pnl = 0.0;  // (X_T + q_T S_T − X_0 − q_0 S_0) / S0, bps·M€
  double terminal_inventory = 0.0;
  double terminal_price = 1.0;  // S_T / S0
  std::vector<double> client_volume;  // [(tier·2 + side)·K + k], M€
  std::vector<double> fill_counts;    // same layout
  double external_volume = 0.0;       // M€
  std::vector<double> acf;
};

struct SimMetrics {
  double mean_pnl = 0.0;
  double std_pnl = 0.0;
  std::vector<double> turnover_by_tier;  // M€/day, both sides
  double client_turnover = 0.0;
  double external_turnover = 0.0;
  std::vector<double> volume_share_by_tier;
  double external_share = 0.0;
  double client_share = 0.0;          // internalized share of total traded volume
  double externalization_ratio = 0.0; // external / client volume
  double tau_r_minutes = 0.0;
  std::vector<double> inventory_acf;
  std::size_t n_paths = 0;
  std::uint64_t seed = 0;
};

struct SimResult {
  std::vector<PathRecord> paths;
  SimMetrics metrics;
  std::vector<StepEvent> events;
};

/// Per-path generator seeded from (seed, path) so results do not depend on scheduling.
inline std::mt19937_64 path_engine(std::uint64_t seed, std::uint64_t path) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(path), static_cast<std::uint32_t>(path >> 32), 0x5eedu};
  return std::mt19937_64(seq);
}

namespace detail {

// Per-node arrival table: one entry per (tier, side, size) with its fill probability per step.
struct ArrivalTable {
  std::size_t combos = 0;
  std::vector<double> cumulative;  // [node·combos + c]
  std::vector<double> total;       // per node
};

inline ArrivalTable build_arrivals(const SimConfig& cfg) {
  const auto& s = cfg.strategy;
  const auto& p = cfg.params;
  ArrivalTable t;
  t.combos = s.n_tiers * 2 * s.n_sizes();
  t.cumulative.resize(s.nodes() * t.combos);
  t.total.resize(s.nodes());
  for (std::size_t i = 0; i < s.nodes(); ++i) {
    double acc = 0.0;
    std::size_t c = 0;
    for (std::size_t tn = 0; tn < s.n_tiers; ++tn)
      for (int side = 0; side < 2; ++side)
        for (std::size_t k = 0; k < s.n_sizes(); ++k, ++c) {
          const double quote = side == 0 ? s.bid(tn, k, i) : s.ask(tn, k, i);
          if (std::isfinite(quote)) acc += p.tiers[tn].intensity(k, quote) * cfg.step;
          t.cumulative[i * t.combos + c] = acc;
        }
    t.total[i] = acc;
  }
  return t;
}

}  // namespace detail

inline void validate(const SimConfig& cfg) {
  {
    // A frozen price (sigma = 0) is a legitimate simulation scenario even though the solver needs sigma > 0.
    ModelParams p = cfg.params;
    if (p.sigma == 0.0) p.sigma = 1.0;
    p.validate();
  }
  cfg.strategy.validate();
  if (cfg.n_paths < 1) throw ValidationError("n_paths must be >= 1");
  if (!(cfg.step > 0.0) || !(cfg.horizon >= cfg.step)) throw ValidationError("need 0 < step <= horizon");
  if (!(cfg.initial_price > 0.0)) throw ValidationError("initial price must be positive");
  if (std::abs(cfg.initial_inventory) > cfg.params.q_bound) throw ValidationError("initial inventory outside bounds");
  if (cfg.strategy.n_tiers != cfg.params.n_tiers() || cfg.strategy.sizes != cfg.params.ladder.sizes ||
      cfg.strategy.nodes() != cfg.params.grid_points)
    throw ValidationError("strategy table does not match model parameters");
  if (!(cfg.burn_in_fraction >= 0.0 && cfg.burn_in_fraction < 1.0)) throw ValidationError("burn-in fraction must be in [0, 1)");
  if (cfg.acf_stride < 1) throw ValidationError("acf_stride must be >= 1");
  double total = 0.0;
  for (const auto& tier : cfg.params.tiers)
    for (double l : tier.lambda_by_size) {
      if (l * cfg.step >= 0.1)
        throw ValidationError("step too large: arrival probability per step reaches " + std::to_string(l * cfg.step));
      total += 2.0 * l * cfg.step;
    }
  if (total > 1.0) throw ValidationError("step too large: total arrival probability per step exceeds 1");
}

namespace detail {

inline PathRecord simulate_path(const SimConfig& cfg, const ArrivalTable& arrivals, std::size_t path,
                                Autocorrelator* acf, std::vector<StepEvent>* events) {
  const auto& p = cfg.params;
  const auto& table = cfg.strategy;
  const std::size_t n_sizes = table.n_sizes();
  const auto n_steps = static_cast<std::size_t>(std::llround(cfg.horizon / cfg.step));
  const std::size_t burn_in = static_cast<std::size_t>(std::floor(cfg.burn_in_fraction * double(n_steps)));
  const double vol = p.sigma * 1e-4 * std::sqrt(cfg.step);
  const double drift = -0.5 * vol * vol;
  const double bound = p.q_bound;

  auto rng = path_engine(cfg.seed, path);
  boost::random::uniform_01<double> uniform;
  boost::random::normal_distribution<double> normal;

  PathRecord rec;
  rec.client_volume.assign(arrivals.combos, 0.0);
  rec.fill_counts.assign(arrivals.combos, 0.0);
  std::vector<double> samples;
  if (acf) samples.reserve((n_steps - burn_in) / cfg.acf_stride + 1);

  double q = cfg.initial_inventory, s = 1.0, cash = -q;  // wealth X + qS starts at 0
  for (std::size_t step = 0; step < n_steps; ++step) {
    const std::size_t node = table.nearest_node(q);
    StepEvent ev;
    ev.price_before = s;

    const double u = uniform(rng);
    if (u < arrivals.total[node]) {
      const double* cum = &arrivals.cumulative[node * arrivals.combos];
      const std::size_t c = static_cast<std::size_t>(std::upper_bound(cum, cum + arrivals.combos, u) - cum);
      const std::size_t tier = c / (2 * n_sizes), side = (c / n_sizes) % 2, k = c % n_sizes;
      const double z = table.sizes[k];
      const double target = side == 0 ? q + z : q - z;
      if (std::abs(target) <= bound + 1e-9) {
        const double quote = side == 0 ? table.bid(tier, k, node) : table.ask(tier, k, node);
        if (side == 0)
          cash -= z * s * (1.0 - quote * 1e-4);
        else
          cash += z * s * (1.0 + quote * 1e-4);
        q = target;
        rec.client_volume[c] += z;
        rec.fill_counts[c] += 1.0;
        ev.fill_margin += z * s * quote;
        ev.fills = 1;
      }
    }

    double v = table.hedge_rate[table.nearest_node(q)];
    if (q + v * cfg.step > bound) v = (bound - q) / cfg.step;
    if (q + v * cfg.step < -bound) v = (-bound - q) / cfg.step;
    if (v != 0.0) {
      const double cost = cost_L(v, p.cost);
      q += v * cfg.step;
      cash -= v * s * cfg.step + cost * 1e-4 * s * cfg.step;
      rec.external_volume += std::abs(v) * cfg.step;
      ev.execution_cost = cost * s * cfg.step;
      s *= 1.0 + p.impact_k * v * cfg.step * 1e-4;
    }
    ev.hedge_rate = v;
    s *= std::exp(vol * normal(rng) + drift);
    if (!(s > 0.0) || !std::isfinite(s)) throw NumericError("price left the positive reals on path " + std::to_string(path));

    if (events) {
      ev.path = path;
      ev.step = step;
      ev.price_after = s;
      ev.inventory_after = q;
      events->push_back(ev);
    }
    if (acf && step >= burn_in && (step - burn_in) % cfg.acf_stride == 0) samples.push_back(q);
  }
  rec.pnl = (cash + q * s) * 1e4;
  rec.terminal_inventory = q;
  rec.terminal_price = s;
  if (acf) {
    if (samples.size() < min_stationary_samples)
      throw InsufficientDataError("stationary segment has " + std::to_string(samples.size()) + " inventory samples");
    rec.acf = (*acf)(samples, cfg.acf_max_lag);
  }
  return rec;
}

}  // namespace detail

/// Pools per-path records into metrics; paths are reduced in index order.
inline SimMetrics summarize(const SimConfig& cfg, std::span<const PathRecord> paths) {
  SimMetrics m;
  m.n_paths = paths.size();
  m.seed = cfg.seed;
  const std::size_t n_tiers = cfg.strategy.n_tiers, n_sizes = cfg.strategy.n_sizes();
  double sum = 0.0;
  for (const auto& r : paths) sum += r.pnl;
  m.mean_pnl = sum / double(paths.size());
  double ss = 0.0;
  for (const auto& r : paths) ss += (r.pnl - m.mean_pnl) * (r.pnl - m.mean_pnl);
  m.std_pnl = paths.size() > 1 ? std::sqrt(ss / double(paths.size() - 1)) : 0.0;

  const double days = double(paths.size()) * cfg.horizon;
  m.turnover_by_tier.assign(n_tiers, 0.0);
  double external = 0.0;
  for (const auto& r : paths) {
    for (std::size_t c = 0; c < r.client_volume.size(); ++c) m.turnover_by_tier[c / (2 * n_sizes)] += r.client_volume[c];
    external += r.external_volume;
  }
  double client = 0.0;
  for (auto& t : m.turnover_by_tier) {
    client += t;
    t /= days;
  }
  m.client_turnover = client / days;
  m.external_turnover = external / days;
  const double total = client + external;
  m.volume_share_by_tier.assign(n_tiers, 0.0);
  if (total > 0.0) {
    for (std::size_t n = 0; n < n_tiers; ++n) m.volume_share_by_tier[n] = m.turnover_by_tier[n] * days / total;
    m.external_share = external / total;
    m.client_share = client / total;
  }
  m.externalization_ratio = client > 0.0 ? external / client : 0.0;

  if (cfg.compute_acf) {
    std::vector<std::vector<double>> acfs;
    acfs.reserve(paths.size());
    for (const auto& r : paths) acfs.push_back(r.acf);
    m.inventory_acf = mean_acf(acfs);
    m.tau_r_minutes = integrate_acf(m.inventory_acf, cfg.step * double(cfg.acf_stride)) * minutes_per_day;
  }
  return m;
}

/// Monte Carlo simulation of a dealer following a stationary strategy table.
///
/// Each step: at most one client fill drawn from the per-node arrival table
/// (each (tier, side, size) fires with probability λ f(δ) step), then the
/// hedge trade with its cost and permanent impact, then the diffusive price
/// move. Fills that would breach the inventory bound are skipped.
inline SimResult simulate(const SimConfig& cfg) {
  validate(cfg);
  const auto arrivals = detail::build_arrivals(cfg);
  SimResult result;
  result.paths.resize(cfg.n_paths);
  const std::size_t logged = cfg.record_events ? std::min(cfg.event_paths, cfg.n_paths) : 0;
  std::vector<std::vector<StepEvent>> events(logged);

  const unsigned workers = std::max(1u, std::min<unsigned>(cfg.threads, static_cast<unsigned>(cfg.n_paths)));
  auto run = [&](unsigned worker) {
    Autocorrelator acf;
    for (std::size_t path = worker; path < cfg.n_paths; path += workers)
      result.paths[path] =
          detail::simulate_path(cfg, arrivals, path, cfg.compute_acf ? &acf : nullptr, path < logged ? &events[path] : nullptr);
  };
  if (workers == 1) {
    run(0);
  } else {
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        try {
          run(w);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    for (auto& t : pool) t.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }
  for (auto& e : events) result.events.insert(result.events.end(), e.begin(), e.end());
  result.metrics = summarize(cfg, result.paths);
  return result;
}

/// Upper bound on client turnover: every streamed quote filled at full intensity, M€/day.
inline double max_client_turnover(const ModelParams& params) {
  double total = 0.0;
  for (const auto& tier : params.tiers)
    for (std::size_t k = 0; k < params.ladder.size(); ++k) total += 2.0 * params.ladder.sizes[k] * tier.lambda_by_size[k];
  return total;
}

}  // namespace fxmm
