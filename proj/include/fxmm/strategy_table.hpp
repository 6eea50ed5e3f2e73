#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "fxmm/errors.hpp"

namespace fxmm {

/// Pricing ladders per tier and size, and the external hedge rate, as functions of inventory.
///
/// Quotes are in bps; a quote is NaN where the corresponding fill would leave
/// the inventory grid. The band [band_lower, band_upper] is the inventory range
/// around zero where the hedge rate is exactly zero.
struct StrategyTable {
  std::vector<double> q_grid;  // M€
  std::vector<double> sizes;   // M€
  std::size_t n_tiers = 0;
  std::vector<double> bid_quotes;  // [(tier·K + k)·N + i]
  std::vector<double> ask_quotes;
  std::vector<double> hedge_rate;  // M€/day
  double band_lower = 0.0;
  double band_upper = 0.0;

  StrategyTable() = default;
  StrategyTable(std::vector<double> q, std::vector<double> z, std::size_t tiers)
      : q_grid(std::move(q)), sizes(std::move(z)), n_tiers(tiers),
        bid_quotes(tiers * sizes.size() * q_grid.size(), std::numeric_limits<double>::quiet_NaN()),
        ask_quotes(bid_quotes.size(), std::numeric_limits<double>::quiet_NaN()),
        hedge_rate(q_grid.size(), 0.0) {}

  [[nodiscard]] std::size_t nodes() const noexcept { return q_grid.size(); }
  [[nodiscard]] std::size_t n_sizes() const noexcept { return sizes.size(); }
  [[nodiscard]] std::size_t center_node() const noexcept { return (q_grid.size() - 1) / 2; }

  [[nodiscard]] std::size_t index(std::size_t tier, std::size_t k, std::size_t i) const {
    return (tier * sizes.size() + k) * q_grid.size() + i;
  }
  [[nodiscard]] double bid(std::size_t tier, std::size_t k, std::size_t i) const { return bid_quotes[index(tier, k, i)]; }
  [[nodiscard]] double ask(std::size_t tier, std::size_t k, std::size_t i) const { return ask_quotes[index(tier, k, i)]; }
  double& bid(std::size_t tier, std::size_t k, std::size_t i) { return bid_quotes[index(tier, k, i)]; }
  double& ask(std::size_t tier, std::size_t k, std::size_t i) { return ask_quotes[index(tier, k, i)]; }

  /// Node nearest to inventory q, clamped to the grid.
  [[nodiscard]] std::size_t nearest_node(double q) const {
    const double h = (q_grid.back() - q_grid.front()) / double(q_grid.size() - 1);
    const double x = std::round((q - q_grid.front()) / h);
    if (x <= 0.0) return 0;
    if (x >= double(q_grid.size() - 1)) return q_grid.size() - 1;
    return static_cast<std::size_t>(x);
  }

  /// Recomputes the band as the maximal run of zero hedge rates containing the center node.
  void update_band_from_hedge() {
    const std::size_t c = center_node();
    std::size_t lo = c, hi = c;
    if (hedge_rate[c] == 0.0) {
      while (lo > 0 && hedge_rate[lo - 1] == 0.0) --lo;
      while (hi + 1 < nodes() && hedge_rate[hi + 1] == 0.0) ++hi;
    }
    band_lower = q_grid[lo];
    band_upper = q_grid[hi];
  }

  void validate() const {
    if (q_grid.size() < 3 || q_grid.size() % 2 == 0) throw ValidationError("strategy grid must have an odd node count");
    if (sizes.empty() || n_tiers == 0) throw ValidationError("strategy needs at least one tier and size");
    const std::size_t expected = n_tiers * sizes.size() * q_grid.size();
    if (bid_quotes.size() != expected || ask_quotes.size() != expected || hedge_rate.size() != q_grid.size())
      throw ValidationError("strategy table dimensions are inconsistent");
  }

  friend bool operator==(const StrategyTable& a, const StrategyTable& b) {
    auto same = [](const std::vector<double>& x, const std::vector<double>& y) {
      if (x.size() != y.size()) return false;
      for (std::size_t i = 0; i < x.size(); ++i)
        if (!(x[i] == y[i] || (std::isnan(x[i]) && std::isnan(y[i])))) return false;
      return true;
    };
    return a.n_tiers == b.n_tiers && same(a.q_grid, b.q_grid) && same(a.sizes, b.sizes) &&
           same(a.bid_quotes, b.bid_quotes) && same(a.ask_quotes, b.ask_quotes) && same(a.hedge_rate, b.hedge_rate) &&
           a.band_lower == b.band_lower && a.band_upper == b.band_upper;
  }
};

}  // namespace fxmm
