#pragma once

#include <algorithm>
#include <math.h>  // the pchip header calls isnan unqualified
#include <boost/math/interpolators/pchip.hpp>
#include <boost/random/uniform_real_distribution.hpp>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "fxmm/errors.hpp"
#include "fxmm/hamiltonians.hpp"
#include "fxmm/hjb_solver.hpp"
#include "fxmm/model_params.hpp"
#include "fxmm/simulator.hpp"
#include "fxmm/strategy_io.hpp"
#include "fxmm/strategy_table.hpp"

namespace fxmm {

/// Ranges of the random strategy perturbations.
///
/// Quote shifts are uniform in ±quote_shift bps; band and slope factors are
/// uniform in [1/(1+spread), 1+spread]. All zero gives the identity.
struct PerturbationMagnitudes {
  double quote_shift = 0.1;
  double band_scale_spread = 1.0;   // factor in [0.5, 2]
  double slope_scale_spread = 1.0;  // factor in [0.5, 2]

  void validate() const {
    if (!(quote_shift >= 0.0) || !(band_scale_spread >= 0.0) || !(slope_scale_spread >= 0.0))
      throw ValidationError("perturbation magnitudes must be nonnegative");
  }
};

/// One concrete perturbation: per-tier quote shifts and the band/slope factors.
struct Perturbation {
  std::vector<double> bid_shift;  // per tier, bps
  std::vector<double> ask_shift;
  double band_scale = 1.0;
  double slope_scale = 1.0;
};

inline Perturbation draw_perturbation(std::size_t n_tiers, const PerturbationMagnitudes& m, std::uint64_t seed) {
  m.validate();
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), 0x9e37u};
  std::mt19937_64 rng(seq);
  auto uniform = [&](double lo, double hi) {
    return lo == hi ? lo : boost::random::uniform_real_distribution<double>(lo, hi)(rng);
  };
  Perturbation p;
  for (std::size_t n = 0; n < n_tiers; ++n) {
    p.bid_shift.push_back(uniform(-m.quote_shift, m.quote_shift));
    p.ask_shift.push_back(uniform(-m.quote_shift, m.quote_shift));
  }
  p.band_scale = uniform(1.0 / (1.0 + m.band_scale_spread), 1.0 + m.band_scale_spread);
  p.slope_scale = uniform(1.0 / (1.0 + m.slope_scale_spread), 1.0 + m.slope_scale_spread);
  return p;
}

/// Applies a perturbation to a strategy.
///
/// Quotes are shifted additively per tier and side. Each band edge b moves to
/// b' = round(band_scale · b) (in nodes); outside the new band the hedge curve
/// is the original one translated outward by b' − b and multiplied by
/// slope_scale, so it still starts from zero at the band edge. Mirror
/// symmetry is not enforced.
inline StrategyTable apply_perturbation(const StrategyTable& s, const Perturbation& p) {
  s.validate();
  if (p.bid_shift.size() != s.n_tiers || p.ask_shift.size() != s.n_tiers)
    throw ValidationError("perturbation tier count does not match the strategy");
  if (!(p.band_scale > 0.0) || !(p.slope_scale >= 0.0)) throw ValidationError("perturbation factors must be positive");
  StrategyTable out = s;
  for (std::size_t n = 0; n < s.n_tiers; ++n)
    for (std::size_t k = 0; k < s.n_sizes(); ++k)
      for (std::size_t i = 0; i < s.nodes(); ++i) {
        out.bid(n, k, i) += p.bid_shift[n];
        out.ask(n, k, i) += p.ask_shift[n];
      }

  const auto c = static_cast<long>(s.center_node());
  const auto last = static_cast<long>(s.nodes()) - 1;
  const long hi = static_cast<long>(s.nearest_node(s.band_upper)) - c;  // band half-widths in nodes
  const long lo = c - static_cast<long>(s.nearest_node(s.band_lower));
  const long new_hi = std::min(static_cast<long>(std::lround(p.band_scale * double(hi))), last - c);
  const long new_lo = std::min(static_cast<long>(std::lround(p.band_scale * double(lo))), c);
  for (long i = 0; i <= last; ++i) {
    const long d = i - c;
    double v = 0.0;
    if (d > new_hi)
      v = s.hedge_rate[static_cast<std::size_t>(std::clamp(c + d - (new_hi - hi), c, last))];
    else if (d < -new_lo)
      v = s.hedge_rate[static_cast<std::size_t>(std::clamp(c + d + (new_lo - lo), 0L, c))];
    out.hedge_rate[static_cast<std::size_t>(i)] = p.slope_scale * v;
  }
  out.update_band_from_hedge();
  return out;
}

/// Random perturbation of a strategy, deterministic in `seed`.
inline StrategyTable perturb_strategy(const StrategyTable& s, const PerturbationMagnitudes& m, std::uint64_t seed) {
  return apply_perturbation(s, draw_perturbation(s.n_tiers, m, seed));
}

/// Expected P&L over `horizon` of a dealer who never manages risk but still optimizes quotes.
inline double pnl_ceiling(const ModelParams& params, double horizon) {
  double rate = 0.0;
  for (const auto& tier : params.tiers) {
    const double h0 = ClientHamiltonian(tier.shape).value(0.0);
    for (std::size_t k = 0; k < params.ladder.size(); ++k) rate += 2.0 * params.ladder.sizes[k] * tier.lambda_by_size[k] * h0;
  }
  return horizon * rate;
}

/// Cubic smoothing curve through (x, y) points: monotone piecewise-cubic Hermite
/// interpolation inside the data range, linear continuation outside it.
class FrontierCurve {
 public:
  FrontierCurve(std::vector<double> x, std::vector<double> y) {
    if (x.size() != y.size() || x.empty()) throw ValidationError("frontier curve needs matching, nonempty x and y");
    std::vector<std::size_t> order(x.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return x[a] < x[b]; });
    for (auto i : order) {
      if (!x_.empty() && !(x[i] > x_.back())) continue;  // strictly increasing abscissae
      x_.push_back(x[i]);
      y_.push_back(y[i]);
    }
    if (x_.size() >= 4) {
      auto xs = x_, ys = y_;
      spline_ = std::make_shared<boost::math::interpolators::pchip<std::vector<double>>>(std::move(xs), std::move(ys));
    }
  }

  [[nodiscard]] double operator()(double x) const {
    if (x_.size() == 1) return y_.front();
    if (x <= x_.front()) return y_.front() + slope(0) * (x - x_.front());
    if (x >= x_.back()) return y_.back() + slope(x_.size() - 2) * (x - x_.back());
    if (spline_) return (*spline_)(x);
    const auto j = static_cast<std::size_t>(std::upper_bound(x_.begin(), x_.end(), x) - x_.begin()) - 1;
    return y_[j] + slope(j) * (x - x_[j]);
  }

  [[nodiscard]] const std::vector<double>& knots_x() const noexcept { return x_; }
  [[nodiscard]] const std::vector<double>& knots_y() const noexcept { return y_; }

 private:
  [[nodiscard]] double slope(std::size_t j) const {
    if (spline_) return spline_->prime(j == 0 ? x_.front() : x_.back());
    return (y_[j + 1] - y_[j]) / (x_[j + 1] - x_[j]);
  }
  std::vector<double> x_, y_;
  std::shared_ptr<boost::math::interpolators::pchip<std::vector<double>>> spline_;
};

struct FrontierOptions {
  std::vector<double> gammas{1e-4, 3e-4, 1e-3, 3e-3, 1e-2, 3e-2, 1e-1};
  std::size_t perturbations = 20;
  PerturbationMagnitudes magnitudes;
  std::size_t n_paths = 1000;
  double horizon = 0.05;  // days
  double step = 1e-5;     // days
  std::uint64_t seed = 1;
  SolverOptions solver;
  double max_solve_horizon = 1.0;
  unsigned threads = 1;
};

struct FrontierPoint {
  double gamma = 0.0;
  bool optimal = false;
  double std_pnl = 0.0;
  double mean_pnl = 0.0;
};

struct FrontierResult {
  std::vector<FrontierPoint> points;
  double ceiling = 0.0;  // analytic no-risk-management expected P&L over the horizon
};

/// Optimal and randomly perturbed strategies per γ, each evaluated by simulation.
///
/// All strategies share the simulation seed (common random numbers), so the
/// comparison between a perturbation and its optimum is not blurred by
/// independent Monte Carlo noise.
inline FrontierResult efficient_frontier(const ModelParams& base, const FrontierOptions& opt) {
  if (opt.gammas.empty()) throw ValidationError("frontier needs at least one gamma");
  opt.magnitudes.validate();
  FrontierResult result;
  result.ceiling = pnl_ceiling(base, opt.horizon);
  for (std::size_t g = 0; g < opt.gammas.size(); ++g) {
    ModelParams params = base;
    params.gamma = opt.gammas[g];
    const auto sol = solve_stationary(params, opt.solver, opt.max_solve_horizon);
    const auto optimal = extract_strategy(sol.value, params, 0);

    SimConfig cfg;
    cfg.params = params;
    cfg.horizon = opt.horizon;
    cfg.step = opt.step;
    cfg.n_paths = opt.n_paths;
    cfg.seed = opt.seed;
    cfg.compute_acf = false;
    cfg.threads = opt.threads;

    cfg.strategy = optimal;
    const auto m = simulate(cfg).metrics;
    result.points.push_back({params.gamma, true, m.std_pnl, m.mean_pnl});
    for (std::size_t j = 0; j < opt.perturbations; ++j) {
      cfg.strategy = perturb_strategy(optimal, opt.magnitudes, opt.seed ^ (0x100000001b3ull * (g * 1000 + j + 1)));
      const auto mp = simulate(cfg).metrics;
      result.points.push_back({params.gamma, false, mp.std_pnl, mp.mean_pnl});
    }
  }
  return result;
}

/// Curve through the optimal points of a frontier, in (std, mean) coordinates.
inline FrontierCurve optimal_curve(const FrontierResult& r) {
  std::vector<double> x, y;
  for (const auto& p : r.points)
    if (p.optimal) {
      x.push_back(p.std_pnl);
      y.push_back(p.mean_pnl);
    }
  return {std::move(x), std::move(y)};
}

inline void write_frontier(std::ostream& out, const FrontierResult& r) {
  out << "gamma,kind,std_pnl,mean_pnl\n";
  for (const auto& p : r.points)
    out << format_number(p.gamma) << ',' << (p.optimal ? "optimal" : "perturbed") << ',' << format_number(p.std_pnl) << ','
        << format_number(p.mean_pnl) << '\n';
}

}  // namespace fxmm
