#include <gtest/gtest.h>

#include <cmath>

#include "fxmm/hjb_solver.hpp"
#include "fxmm/simulator.hpp"
#include "oracles.hpp"

namespace {

using namespace fxmm;

StrategyTable flat_table(const ModelParams& p, double quote, double hedge) {
  StrategyTable t(p.q_grid(), p.ladder.sizes, p.n_tiers());
  std::fill(t.bid_quotes.begin(), t.bid_quotes.end(), quote);
  std::fill(t.ask_quotes.begin(), t.ask_quotes.end(), quote);
  std::fill(t.hedge_rate.begin(), t.hedge_rate.end(), hedge);
  t.update_band_from_hedge();
  return t;
}

const StrategyTable& optimal_table() {
  static const StrategyTable t = [] {
    const ModelParams p;
    return extract_strategy(solve_hjb(p).value, p, 0);
  }();
  return t;
}

SimConfig optimal_config(std::size_t paths, double horizon) {
  SimConfig c;
  c.strategy = optimal_table();
  c.n_paths = paths;
  c.horizon = horizon;
  return c;
}

TEST(Simulator, NoFlowNoActionNoPnl) {
  SimConfig c;
  for (auto& t : c.params.tiers) std::fill(t.lambda_by_size.begin(), t.lambda_by_size.end(), 0.0);
  c.strategy = flat_table(c.params, 0.1, 0.0);
  c.n_paths = 5;
  c.horizon = 0.1;
  c.compute_acf = false;
  const auto r = simulate(c);
  for (const auto& p : r.paths) {
    EXPECT_EQ(p.pnl, 0.0);
    EXPECT_EQ(p.terminal_inventory, 0.0);
  }
  EXPECT_EQ(r.metrics.external_share, 0.0);
}

TEST(Simulator, DeterministicHedgeCostWithFrozenPrice) {
  SimConfig c;
  c.params.sigma = 0.0;
  c.params.impact_k = 0.0;
  for (auto& t : c.params.tiers) std::fill(t.lambda_by_size.begin(), t.lambda_by_size.end(), 0.0);
  const double v = 100.0;
  c.strategy = flat_table(c.params, 0.1, v);
  c.n_paths = 2;
  c.horizon = 1.0;
  c.compute_acf = false;
  const auto r = simulate(c);
  for (const auto& p : r.paths) {
    // Cash X_T = −(v + L(v)·1e-4)·T in S0 units, and q_T = v·T revalued at S0.
    EXPECT_NEAR(p.terminal_inventory, v * c.horizon, 1e-9);
    EXPECT_NEAR(p.pnl, -cost_L(v, c.params.cost) * c.horizon, 1e-6);
    EXPECT_EQ(p.terminal_price, 1.0);
  }
  EXPECT_NEAR(r.metrics.external_turnover, v, 1e-9);
  EXPECT_EQ(r.metrics.client_turnover, 0.0);
  EXPECT_EQ(r.metrics.external_share, 1.0);
}

TEST(Simulator, PoissonArrivalsWithFrozenQuotes) {
  SimConfig c;
  c.params.ladder = SizeLadder{{1.0, 2.0}};
  c.params.tiers = {TierIntensity{{-0.3, 5.0}, {100.0, 50.0}}};
  const double quote = 0.05;
  c.strategy = flat_table(c.params, quote, 0.0);
  c.n_paths = 200;
  c.horizon = 2.0;
  c.compute_acf = false;
  c.threads = 4;
  const auto r = simulate(c);
  const double f = c.params.tiers[0].shape.fill_probability(quote);
  for (std::size_t side = 0; side < 2; ++side)
    for (std::size_t k = 0; k < 2; ++k) {
      const std::size_t combo = side * 2 + k;
      double count = 0.0;
      for (const auto& p : r.paths) count += p.fill_counts[combo];
      const double expected = c.params.tiers[0].lambda_by_size[k] * f * c.horizon * double(c.n_paths);
      EXPECT_NEAR(count, expected, 3.0 * std::sqrt(expected)) << "side " << side << " size " << k;
    }
}

TEST(Simulator, AccountingIdentityFromEventLog) {
  auto c = optimal_config(3, 0.5);
  c.record_events = true;
  c.event_paths = 3;
  c.compute_acf = false;
  c.initial_inventory = 40.0;
  const auto r = simulate(c);
  std::vector<double> margin(3, 0.0), cost(3, 0.0), reval(3, 0.0);
  for (const auto& e : r.events) {
    margin[e.path] += e.fill_margin;
    cost[e.path] += e.execution_cost;
    reval[e.path] += e.inventory_after * (e.price_after - e.price_before) * 1e4;
    ASSERT_LE(std::abs(e.inventory_after), c.params.q_bound + 1e-9);
  }
  for (std::size_t p = 0; p < 3; ++p) {
    const double rebuilt = margin[p] - cost[p] + reval[p];
    EXPECT_NEAR(r.paths[p].pnl, rebuilt, 1e-8 * std::max(1.0, std::abs(rebuilt))) << "path " << p;
    EXPECT_GT(margin[p], 0.0);
  }
}

TEST(Simulator, SeedDeterminismIndependentOfThreads) {
  auto c = optimal_config(8, 0.2);
  c.acf_max_lag = 500;
  const auto a = simulate(c);
  c.threads = 3;
  const auto b = simulate(c);
  ASSERT_EQ(a.paths.size(), b.paths.size());
  for (std::size_t i = 0; i < a.paths.size(); ++i) EXPECT_EQ(a.paths[i].pnl, b.paths[i].pnl);
  EXPECT_EQ(a.metrics.mean_pnl, b.metrics.mean_pnl);
  EXPECT_EQ(a.metrics.std_pnl, b.metrics.std_pnl);
  EXPECT_EQ(a.metrics.tau_r_minutes, b.metrics.tau_r_minutes);
  c.seed = 2;
  EXPECT_NE(simulate(c).metrics.mean_pnl, a.metrics.mean_pnl);
}

TEST(Simulator, SharesSumToOneAndTurnoverBounded) {
  auto c = optimal_config(4, 1.0);
  const auto m = simulate(c).metrics;
  double share = m.external_share;
  for (double s : m.volume_share_by_tier) share += s;
  EXPECT_NEAR(share, 1.0, 1e-12);
  EXPECT_NEAR(m.client_share + m.external_share, 1.0, 1e-12);
  EXPECT_LE(m.client_turnover, max_client_turnover(c.params));
  EXPECT_GE(m.tau_r_minutes, 0.0);
}

TEST(Simulator, MaxTurnoverAndMeanSize) {
  const ModelParams p;
  EXPECT_NEAR(max_client_turnover(p), 31320.0, 1e-9);
  double mean = 0.0;
  for (std::size_t k = 0; k < p.ladder.size(); ++k) mean += standard_size_weights()[k] * p.ladder.sizes[k];
  EXPECT_NEAR(mean, 4.35, 1e-12);
}

TEST(Simulator, InventoryStaysInBoundsUnderAggressiveQuotes) {
  SimConfig c;
  c.strategy = flat_table(c.params, -3.0, 0.0);  // nearly every quote fills
  c.n_paths = 4;
  c.horizon = 0.5;
  c.record_events = true;
  c.event_paths = 4;
  c.compute_acf = false;
  const auto r = simulate(c);
  for (const auto& e : r.events) ASSERT_LE(std::abs(e.inventory_after), c.params.q_bound + 1e-9);
  EXPECT_LE(r.metrics.client_turnover, max_client_turnover(c.params));
}

TEST(Simulator, ValidationErrors) {
  auto c = optimal_config(0, 1.0);
  EXPECT_THROW(simulate(c), ValidationError);
  c.n_paths = 1;
  c.step = 1e-3;  // λ·step reaches 0.72 for the 1 M€ size
  EXPECT_THROW(simulate(c), ValidationError);
  c.step = 1e-5;
  c.initial_inventory = 300.0;
  EXPECT_THROW(simulate(c), ValidationError);
}

TEST(RiskNeutralizationTime, OrnsteinUhlenbeckOracle) {
  const double kappa = 100.0;  // per day, i.e. 1/κ = 14.4 minutes
  const double interval = 1e-4;
  std::vector<std::vector<double>> series;
  for (std::uint64_t s = 0; s < 40; ++s) series.push_back(oracle::ou_path(kappa, interval, 20000, 77 + s));
  const double tau = risk_neutralization_time(series, interval);
  EXPECT_NEAR(tau, minutes_per_day / kappa, 0.1 * minutes_per_day / kappa);
}

TEST(RiskNeutralizationTime, WhiteNoiseIsNearZero) {
  std::vector<std::vector<double>> series;
  for (std::uint64_t s = 0; s < 10; ++s) series.push_back(oracle::ou_path(1e9, 1.0, 5000, s));
  const double interval = 1e-5;
  const double tau = risk_neutralization_time(series, interval);
  EXPECT_GE(tau, 0.0);
  EXPECT_LT(tau, 2.0 * interval * minutes_per_day);
}

TEST(RiskNeutralizationTime, NeedsEnoughSamples) {
  std::vector<std::vector<double>> series{std::vector<double>(99, 1.0)};
  EXPECT_THROW(risk_neutralization_time(series, 1e-4), InsufficientDataError);
}

}  // namespace
