#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "fxmm/errors.hpp"
#include "fxmm/hamiltonians.hpp"
#include "fxmm/intensity.hpp"

namespace fxmm {

/// Market, flow and control parameters of the dealer problem.
///
/// Units: quotes and prices in bps, inventories in M€, time in days.
/// `gamma` is the risk aversion C·S0 (bps^-1·(M€)^-1).
struct ModelParams {
  double sigma = 50.0;      // bps·day^-1/2
  double impact_k = 5e-3;   // bps·(M€)^-1
  double gamma = 2e-3;      // bps^-1·(M€)^-1
  double horizon = 0.05;    // days
  std::vector<TierIntensity> tiers = standard_tiers();
  SizeLadder ladder = SizeLadder::standard();
  ExecutionCost cost;
  double q_bound = 250.0;   // M€
  std::size_t grid_points = 501;

  [[nodiscard]] std::size_t n_tiers() const noexcept { return tiers.size(); }
  [[nodiscard]] std::size_t n_sizes() const noexcept { return ladder.size(); }
  [[nodiscard]] double dq() const { return 2.0 * q_bound / double(grid_points - 1); }
  [[nodiscard]] double node_q(std::size_t i) const { return -q_bound + double(i) * dq(); }
  [[nodiscard]] std::size_t center_node() const noexcept { return (grid_points - 1) / 2; }

  [[nodiscard]] std::vector<double> q_grid() const {
    std::vector<double> q(grid_points);
    for (std::size_t i = 0; i < grid_points; ++i) q[i] = node_q(i);
    q[center_node()] = 0.0;
    return q;
  }

  /// Number of grid nodes spanned by each ladder size.
  [[nodiscard]] std::vector<std::size_t> size_steps() const {
    std::vector<std::size_t> steps;
    const double h = dq();
    for (double z : ladder.sizes) {
      const double r = z / h;
      const double n = std::round(r);
      if (n < 1.0 || std::abs(r - n) > 1e-9 * std::max(1.0, r))
        throw ValidationError("grid spacing " + std::to_string(h) + " M€ does not divide ladder size " +
                              std::to_string(z) + " M€");
      steps.push_back(static_cast<std::size_t>(n));
    }
    return steps;
  }

  void validate() const {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ValidationError("sigma must be positive");
    if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw ValidationError("gamma must be >= 0");
    if (!std::isfinite(impact_k)) throw ValidationError("impact_k must be finite");
    if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ValidationError("horizon must be positive");
    if (!(q_bound > 0.0) || !std::isfinite(q_bound)) throw ValidationError("q_bound must be positive");
    if (grid_points < 3 || grid_points % 2 == 0) throw ValidationError("grid_points must be odd and >= 3");
    ladder.validate();
    cost.validate();
    if (tiers.empty()) throw ValidationError("at least one client tier is required");
    for (const auto& t : tiers) t.validate(ladder.size());
    (void)size_steps();
  }
};

}  // namespace fxmm
