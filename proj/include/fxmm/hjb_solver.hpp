#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <span>
#include <sstream>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "fxmm/banded.hpp"
#include "fxmm/errors.hpp"
#include "fxmm/hamiltonians.hpp"
#include "fxmm/model_params.hpp"
#include "fxmm/strategy_table.hpp"

namespace fxmm {

struct SolverOptions {
  double dt = 1e-4;  // days
  // Howard iteration stops when sup|θ_new − θ_old| <= policy_tolerance · max(1, sup|θ|).
  double policy_tolerance = 1e-10;
  int max_policy_iterations = 50;
  // Spread (max − min over q) of the t = 0 time derivative below which the solve counts as stationary.
  double stationarity_tolerance = 1e-6;
  double terminal_value = 0.0;
};

/// θ(t_m, q_i) for t_m = m·dt, m = 0..M with t_M = T.
class ValueFunction {
 public:
  ValueFunction() = default;
  ValueFunction(std::vector<double> q_grid, std::size_t levels, double dt)
      : q_(std::move(q_grid)), levels_(levels), dt_(dt), theta_(levels * q_.size(), 0.0) {}

  [[nodiscard]] const std::vector<double>& q_grid() const noexcept { return q_; }
  [[nodiscard]] std::size_t nodes() const noexcept { return q_.size(); }
  [[nodiscard]] std::size_t levels() const noexcept { return levels_; }
  [[nodiscard]] double dt() const noexcept { return dt_; }
  [[nodiscard]] double time(std::size_t level) const { return double(level) * dt_; }

  [[nodiscard]] std::span<const double> theta(std::size_t level) const {
    check(level);
    return {theta_.data() + level * q_.size(), q_.size()};
  }
  [[nodiscard]] std::span<double> theta(std::size_t level) {
    check(level);
    return {theta_.data() + level * q_.size(), q_.size()};
  }
  [[nodiscard]] double at(std::size_t level, std::size_t node) const { return theta(level)[node]; }

  /// Time level nearest to t.
  [[nodiscard]] std::size_t level_at(double t) const {
    if (!(t >= -0.5 * dt_) || t > time(levels_ - 1) + 0.5 * dt_) throw ValidationError("time outside the solved range");
    return std::min(levels_ - 1, static_cast<std::size_t>(std::llround(std::max(0.0, t) / dt_)));
  }

 private:
  void check(std::size_t level) const {
    if (level >= levels_) throw ValidationError("time level out of range");
  }
  std::vector<double> q_;
  std::size_t levels_ = 0;
  double dt_ = 0.0;
  std::vector<double> theta_;
};

struct SolveReport {
  double stationarity_residual = 0.0;  // max_q ∂tθ − min_q ∂tθ at t = 0, bps·M€/day
  double quote_change = 0.0;           // max quote change between the first two levels, bps
  double hedge_change = 0.0;           // max hedge-rate change between the first two levels, M€/day
  bool stationary = false;
  std::size_t time_steps = 0;
  std::size_t policy_iterations = 0;
  std::size_t max_policy_iterations = 0;
  double wall_seconds = 0.0;
};

struct HjbSolution {
  ValueFunction value;
  SolveReport report;
};

/// ∂qθ by central differences at interior nodes and one-sided differences at the ends.
inline std::vector<double> inventory_gradient(std::span<const double> theta, double dq) {
  const std::size_t n = theta.size();
  std::vector<double> g(n);
  for (std::size_t i = 1; i + 1 < n; ++i) g[i] = (theta[i + 1] - theta[i - 1]) / (2.0 * dq);
  g[0] = (theta[1] - theta[0]) / dq;
  g[n - 1] = (theta[n - 1] - theta[n - 2]) / dq;
  return g;
}

struct InventoryBand {
  double lower = 0.0;
  double upper = 0.0;
  std::size_t lower_node = 0;
  std::size_t upper_node = 0;

  [[nodiscard]] std::size_t width_nodes() const { return upper_node - lower_node + 1; }
};

/// Maximal run of nodes around q = 0 with |∂qθ + kq| <= phi, where the dealer does not hedge.
/// Falls back to the single center node when even q = 0 fails the test.
inline InventoryBand internalization_band(const ValueFunction& vf, const ModelParams& params, std::size_t level) {
  const auto g = inventory_gradient(vf.theta(level), params.dq());
  const auto& q = vf.q_grid();
  auto inside = [&](std::size_t i) { return std::abs(g[i] + params.impact_k * q[i]) <= params.cost.phi; };
  const std::size_t c = params.center_node();
  std::size_t lo = c, hi = c;
  if (inside(c)) {
    while (lo > 0 && inside(lo - 1)) --lo;
    while (hi + 1 < q.size() && inside(hi + 1)) ++hi;
  }
  return {q[lo], q[hi], lo, hi};
}

/// Optimal quotes and hedge rate from θ at one time level.
inline StrategyTable extract_strategy(const ValueFunction& vf, const ModelParams& params, std::size_t level) {
  params.validate();
  if (vf.nodes() != params.grid_points) throw ValidationError("value function grid does not match parameters");
  const auto theta = vf.theta(level);
  const auto steps = params.size_steps();
  const std::size_t n = vf.nodes();
  StrategyTable table(vf.q_grid(), params.ladder.sizes, params.n_tiers());
  for (std::size_t tn = 0; tn < params.n_tiers(); ++tn) {
    const ClientHamiltonian h(params.tiers[tn].shape);
    for (std::size_t k = 0; k < steps.size(); ++k) {
      const double z = params.ladder.sizes[k];
      const std::size_t s = steps[k];
      for (std::size_t i = 0; i < n; ++i) {
        if (i + s < n) table.bid(tn, k, i) = h.optimal_quote((theta[i] - theta[i + s]) / z);
        if (i >= s) table.ask(tn, k, i) = h.optimal_quote((theta[i] - theta[i - s]) / z);
      }
    }
  }
  const auto g = inventory_gradient(theta, params.dq());
  for (std::size_t i = 0; i < n; ++i) {
    double v = exec_hamiltonian(g[i] + params.impact_k * table.q_grid[i], params.cost).derivative;
    if (i == 0) v = std::max(v, 0.0);
    if (i + 1 == n) v = std::min(v, 0.0);
    table.hedge_rate[i] = v;
  }
  const auto band = internalization_band(vf, params, level);
  table.band_lower = band.lower;
  table.band_upper = band.upper;
  return table;
}

inline StrategyTable extract_strategy_at(const ValueFunction& vf, const ModelParams& params, double t) {
  return extract_strategy(vf, params, vf.level_at(t));
}

/// Largest absolute quote (bps) and hedge-rate (M€/day) differences between two tables.
inline std::pair<double, double> max_control_change(const StrategyTable& a, const StrategyTable& b) {
  double dq = 0.0, dv = 0.0;
  for (std::size_t i = 0; i < a.bid_quotes.size(); ++i) {
    if (std::isfinite(a.bid_quotes[i])) dq = std::max(dq, std::abs(a.bid_quotes[i] - b.bid_quotes[i]));
    if (std::isfinite(a.ask_quotes[i])) dq = std::max(dq, std::abs(a.ask_quotes[i] - b.ask_quotes[i]));
  }
  for (std::size_t i = 0; i < a.hedge_rate.size(); ++i) dv = std::max(dv, std::abs(a.hedge_rate[i] - b.hedge_rate[i]));
  return {dq, dv};
}

namespace detail {

// Hedge control at node i, chosen by upwinding: v > 0 uses the forward difference,
// v < 0 the backward one, and the branch with the larger Hamiltonian wins.
struct HedgeChoice {
  double rate = 0.0;
  int neighbor = 0;  // +1, -1 or 0 when v = 0
  double gain = 0.0; // v (Dθ + kq) − L(v) evaluated at the chosen branch
};

inline HedgeChoice upwind_hedge(std::span<const double> theta, std::size_t i, double q, double dq,
                                const ModelParams& params) {
  const auto& cost = params.cost;
  const std::size_t n = theta.size();
  HedgeChoice buy, sell;
  if (i + 1 < n) {
    const double p = (theta[i + 1] - theta[i]) / dq + params.impact_k * q;
    const double excess = std::max(0.0, p - cost.phi);
    if (excess > 0.0) buy = {excess / (2.0 * cost.eta), +1, excess * excess / (4.0 * cost.eta)};
  }
  if (i > 0) {
    const double p = (theta[i] - theta[i - 1]) / dq + params.impact_k * q;
    const double excess = std::max(0.0, -p - cost.phi);
    if (excess > 0.0) sell = {-excess / (2.0 * cost.eta), -1, excess * excess / (4.0 * cost.eta)};
  }
  // Both one-sided gradients asking for opposite trades is a sign conflict: stay put.
  if (buy.neighbor != 0 && sell.neighbor != 0) return {};
  return buy.neighbor != 0 ? buy : sell;
}

}  // namespace detail

/// Solves the dealer's Hamilton-Jacobi equation backward from θ(T, ·) = terminal_value.
///
/// Each implicit Euler step is solved by policy iteration: the controls are
/// frozen from the current iterate, the resulting monotone linear system
/// (an M-matrix) is solved exactly, and the loop repeats until the iterate
/// stops moving. Client trades that would push the inventory outside
/// [−q_bound, q_bound] are not admitted.
inline HjbSolution solve_hjb(const ModelParams& params, const SolverOptions& options = {}) {
  params.validate();
  if (!(options.dt > 0.0) || !std::isfinite(options.dt)) throw ValidationError("dt must be positive");
  if (options.max_policy_iterations < 1) throw ValidationError("max_policy_iterations must be >= 1");
  const auto t0 = std::chrono::steady_clock::now();

  const std::size_t n = params.grid_points;
  const double dq = params.dq();
  const auto steps = params.size_steps();
  const auto q = params.q_grid();
  const std::size_t n_steps = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(params.horizon / options.dt - 1e-9)));
  const double dt = params.horizon / double(n_steps);
  const std::size_t max_offset = std::max<std::size_t>(1, *std::max_element(steps.begin(), steps.end()));

  std::vector<ClientHamiltonian> hamiltonians;
  for (const auto& tier : params.tiers) hamiltonians.emplace_back(tier.shape);

  HjbSolution sol{ValueFunction(q, n_steps + 1, dt), {}};
  auto& vf = sol.value;
  std::fill(vf.theta(n_steps).begin(), vf.theta(n_steps).end(), options.terminal_value);

  detail::BandedSystem system(n, max_offset, max_offset);
  std::vector<double> iterate(n), rhs(n);
  const double risk = 0.5 * params.gamma * params.sigma * params.sigma;

  for (std::size_t m = n_steps; m-- > 0;) {
    const auto next = vf.theta(m + 1);
    std::copy(next.begin(), next.end(), iterate.begin());
    std::size_t it = 0;
    for (;;) {
      ++it;
      system.clear();
      for (std::size_t i = 0; i < n; ++i) {
        double diag = 1.0;
        double b = next[i] - dt * risk * q[i] * q[i];
        for (std::size_t tn = 0; tn < params.tiers.size(); ++tn) {
          const auto& tier = params.tiers[tn];
          for (std::size_t k = 0; k < steps.size(); ++k) {
            const double lambda = tier.lambda_by_size[k];
            if (lambda == 0.0) continue;
            const double z = params.ladder.sizes[k];
            const std::size_t s = steps[k];
            auto jump = [&](std::size_t j) {
              const auto h = hamiltonians[tn].evaluate((iterate[i] - iterate[j]) / z);
              const double rate = -lambda * h.derivative;  // λ f(δ*)
              system.add(i, j, -dt * rate);
              diag += dt * rate;
              b += dt * z * rate * h.optimal_quote;
            };
            if (i + s < n) jump(i + s);
            if (i >= s) jump(i - s);
          }
        }
        const auto hedge = detail::upwind_hedge(iterate, i, q[i], dq, params);
        if (hedge.neighbor != 0) {
          const double coef = std::abs(hedge.rate) / dq;
          system.add(i, static_cast<std::size_t>(static_cast<long>(i) + hedge.neighbor), -dt * coef);
          diag += dt * coef;
          b += dt * (hedge.rate * params.impact_k * q[i] - cost_L(hedge.rate, params.cost));
        }
        system.add(i, i, diag);
        rhs[i] = b;
      }
      system.solve(rhs);

      double change = 0.0, scale = 1.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(rhs[i])) {
          std::ostringstream os;
          os << "non-finite value function at t = " << double(m) * dt << ", q = " << q[i];
          throw NumericError(os.str());
        }
        change = std::max(change, std::abs(rhs[i] - iterate[i]));
        scale = std::max(scale, std::abs(rhs[i]));
      }
      std::copy(rhs.begin(), rhs.end(), iterate.begin());
      if (change <= options.policy_tolerance * scale) break;
      if (it >= static_cast<std::size_t>(options.max_policy_iterations))
        throw NonConvergenceError("policy iteration at t = " + std::to_string(double(m) * dt) + " (change " +
                                  std::to_string(change) + ")");
    }
    std::copy(iterate.begin(), iterate.end(), vf.theta(m).begin());
    sol.report.policy_iterations += it;
    sol.report.max_policy_iterations = std::max(sol.report.max_policy_iterations, it);
  }

  sol.report.time_steps = n_steps;
  const auto th0 = vf.theta(0), th1 = vf.theta(1);
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = (th1[i] - th0[i]) / dt;
    lo = std::min(lo, d);
    hi = std::max(hi, d);
  }
  sol.report.stationarity_residual = hi - lo;
  const auto [quote_change, hedge_change] =
      max_control_change(extract_strategy(vf, params, 0), extract_strategy(vf, params, 1));
  sol.report.quote_change = quote_change;
  sol.report.hedge_change = hedge_change;
  sol.report.stationary = sol.report.stationarity_residual <= options.stationarity_tolerance;
  sol.report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return sol;
}

/// Solves with the configured horizon, doubling it until the t = 0 controls are stationary.
///
/// Long-run simulations use the t = 0 strategy as a stationary policy; when
/// the configured horizon is too short for the backward recursion to reach
/// its stationary regime (small risk aversion), the horizon is extended up
/// to `max_horizon`. The returned report says whether stationarity was reached.
inline HjbSolution solve_stationary(ModelParams params, const SolverOptions& options = {}, double max_horizon = 1.0) {
  auto sol = solve_hjb(params, options);
  while (!sol.report.stationary && params.horizon * 2.0 <= max_horizon * (1.0 + 1e-12)) {
    params.horizon *= 2.0;
    sol = solve_hjb(params, options);
  }
  return sol;
}

}  // namespace fxmm
