#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fxmm/errors.hpp"
#include "fxmm/intensity.hpp"

namespace fxmm {

struct QuoteObservation {
  std::string client_id;
  Side side = Side::bid;
  std::size_t size_bucket = 0;  // 0-based index into the ladder
  double quote_bps = 0.0;
  double duration_days = 0.0;
};

struct TradeObservation {
  std::string client_id;
  Side side = Side::bid;
  double size_meur = 0.0;
  double quote_bps = 0.0;
};

enum class SideSelection { bid, ask, pooled };

inline bool selects(SideSelection sel, Side side) {
  return sel == SideSelection::pooled || (sel == SideSelection::bid) == (side == Side::bid);
}

/// A point of an empirical measure: a quote level and its weight (a trade count or a duration).
struct WeightedQuote {
  double quote_bps = 0.0;
  double weight = 0.0;
};

/// Trades and quotes of one size bucket, aggregated by quote level.
///
/// Identical quote levels are merged and levels are kept sorted, so every
/// reduction over a sample is independent of the input order and of how the
/// quote durations were split into records.
struct FlowSample {
  std::vector<WeightedQuote> trades;  // weight = number of trades
  std::vector<WeightedQuote> quotes;  // weight = duration in days

  [[nodiscard]] double trade_count() const {
    double n = 0.0;
    for (const auto& t : trades) n += t.weight;
    return n;
  }
  [[nodiscard]] double total_duration() const {
    double d = 0.0;
    for (const auto& q : quotes) d += q.weight;
    return d;
  }
  [[nodiscard]] bool empty() const { return trades.empty() || quotes.empty(); }
};

namespace detail {
inline std::vector<WeightedQuote> to_points(const std::map<double, double>& m) {
  std::vector<WeightedQuote> out;
  out.reserve(m.size());
  for (const auto& [q, w] : m)
    if (w > 0.0) out.push_back({q, w});
  return out;
}
}  // namespace detail

inline void validate(const QuoteObservation& q, const SizeLadder& ladder) {
  if (!(q.duration_days > 0.0) || !std::isfinite(q.duration_days))
    throw ValidationError("quote duration must be positive");
  if (q.size_bucket >= ladder.size()) throw ValidationError("quote size bucket out of range");
  if (!std::isfinite(q.quote_bps)) throw ValidationError("quote must be finite");
}

inline void validate(const TradeObservation& t) {
  if (!(t.size_meur > 0.0) || !std::isfinite(t.size_meur)) throw ValidationError("trade size must be positive");
  if (!std::isfinite(t.quote_bps)) throw ValidationError("trade quote must be finite");
}

/// Collects the observations of bucket `bucket` on the selected side(s).
/// Pooling concatenates the bid and ask tables, which doubles the quoted time window.
inline FlowSample make_sample(std::span<const TradeObservation> trades, std::span<const QuoteObservation> quotes,
                              const SizeLadder& ladder, std::size_t bucket, SideSelection sides) {
  std::map<double, double> t, q;
  for (const auto& tr : trades) {
    validate(tr);
    if (selects(sides, tr.side) && bucket_trade(tr.size_meur, ladder) == bucket) t[tr.quote_bps] += 1.0;
  }
  for (const auto& qo : quotes) {
    validate(qo, ladder);
    if (selects(sides, qo.side) && qo.size_bucket == bucket) q[qo.quote_bps] += qo.duration_days;
  }
  return FlowSample{detail::to_points(t), detail::to_points(q)};
}

/// One sample per ladder size.
inline std::vector<FlowSample> make_samples(std::span<const TradeObservation> trades,
                                            std::span<const QuoteObservation> quotes, const SizeLadder& ladder,
                                            SideSelection sides) {
  std::vector<std::map<double, double>> t(ladder.size()), q(ladder.size());
  for (const auto& tr : trades) {
    validate(tr);
    if (selects(sides, tr.side)) t[bucket_trade(tr.size_meur, ladder)][tr.quote_bps] += 1.0;
  }
  for (const auto& qo : quotes) {
    validate(qo, ladder);
    if (selects(sides, qo.side)) q[qo.size_bucket][qo.quote_bps] += qo.duration_days;
  }
  std::vector<FlowSample> out(ladder.size());
  for (std::size_t k = 0; k < ladder.size(); ++k) out[k] = FlowSample{detail::to_points(t[k]), detail::to_points(q[k])};
  return out;
}

/// Σ_trades log(λ f(δ_i)) − Σ_quotes λ f(δ_j) τ_j, up to the additive constant of the Poisson likelihood.
inline double log_likelihood(const FlowSample& sample, double lambda, const IntensityShape& shape) {
  if (!sample.trades.empty() && !(lambda > 0.0))
    throw UndefinedLikelihoodError("scale must be positive when trades are present");
  double ll = 0.0;
  if (!sample.trades.empty()) {
    const double log_lambda = std::log(lambda);
    for (const auto& t : sample.trades) ll += t.weight * (log_lambda + shape.log_fill_probability(t.quote_bps));
  }
  for (const auto& q : sample.quotes) ll -= lambda * shape.fill_probability(q.quote_bps) * q.weight;
  return ll;
}

/// Likelihood evaluated directly on raw observation lists for one bucket and side selection.
inline double log_likelihood(std::span<const TradeObservation> trades, std::span<const QuoteObservation> quotes,
                             const SizeLadder& ladder, std::size_t bucket, SideSelection sides, double lambda,
                             const IntensityShape& shape) {
  double ll = 0.0;
  for (const auto& t : trades) {
    if (!selects(sides, t.side) || bucket_trade(t.size_meur, ladder) != bucket) continue;
    if (!(lambda > 0.0)) throw UndefinedLikelihoodError("scale must be positive when trades are present");
    ll += std::log(lambda) + shape.log_fill_probability(t.quote_bps);
  }
  for (const auto& q : quotes) {
    if (!selects(sides, q.side) || q.size_bucket != bucket) continue;
    ll -= lambda * shape.fill_probability(q.quote_bps) * q.duration_days;
  }
  return ll;
}

/// Maximizer of the likelihood in λ for a fixed shape: #trades / Σ_j f(δ_j) τ_j.
inline double analytic_lambda(const FlowSample& sample, const IntensityShape& shape) {
  double exposure = 0.0;
  for (const auto& q : sample.quotes) exposure += shape.fill_probability(q.quote_bps) * q.weight;
  if (!(exposure > 0.0)) throw NoDataError("no quoted exposure in sample");
  return sample.trade_count() / exposure;
}

struct FitOptions {
  IntensityShape initial{0.0, 1.0};
  std::optional<IntensityShape> fixed_shape;
  // Convergence when |∇| <= gradient_tolerance * max(1, #trades), gradient taken in (alpha, log beta).
  double gradient_tolerance = 1e-9;
  int max_iterations = 200;
};

struct ShapeFit {
  IntensityShape shape;
  std::vector<double> lambda_by_size;  // one per sample, 0 for samples without trades
  double log_likelihood = 0.0;
  double gradient_norm = 0.0;
  int iterations = 0;
};

struct BucketFit {
  double lambda = 0.0;
  IntensityShape shape;
  double log_likelihood = 0.0;
  double gradient_norm = 0.0;
  int iterations = 0;
};

namespace detail {

// Profile log-likelihood (λ_k concentrated out) with gradient and Hessian in (alpha, b = log beta).
struct ProfileValue {
  double value = 0.0;
  std::array<double, 2> grad{};
  std::array<double, 3> hess{};  // aa, ab, bb
};

inline ProfileValue profile_likelihood(std::span<const FlowSample> samples, double alpha, double b) {
  const double beta = std::exp(b);
  double value = 0.0, ga = 0.0, gB = 0.0, haa = 0.0, haB = 0.0, hBB = 0.0;
  for (const auto& s : samples) {
    const double count = s.trade_count();
    if (count <= 0.0) continue;
    for (const auto& t : s.trades) {
      const double x = alpha + beta * t.quote_bps;
      const double f = logistic_complement(x), g = logistic_complement(-x);
      const double d = t.quote_bps, w = t.weight;
      value -= w * softplus(x);
      ga -= w * g;
      gB -= w * g * d;
      haa -= w * f * g;
      haB -= w * f * g * d;
      hBB -= w * f * g * d * d;
    }
    double q = 0.0, qa = 0.0, qB = 0.0, qaa = 0.0, qaB = 0.0, qBB = 0.0;
    for (const auto& qt : s.quotes) {
      const double x = alpha + beta * qt.quote_bps;
      const double f = logistic_complement(x), g = logistic_complement(-x);
      const double d = qt.quote_bps, w = qt.weight;
      const double fg = f * g, c = fg * (f - g);  // f' = -fg, f'' = -fg(f - g)
      q += w * f;
      qa -= w * fg;
      qB -= w * fg * d;
      qaa -= w * c;
      qaB -= w * c * d;
      qBB -= w * c * d * d;
    }
    if (!(q > 0.0)) throw NoDataError("no quoted exposure in sample");
    // Counts enter through λ̂ = count / q: value += count log(count / q) − count.
    value += count * (std::log(count) - std::log(q) - 1.0);
    ga -= count * qa / q;
    gB -= count * qB / q;
    haa -= count * (qaa / q - qa * qa / (q * q));
    haB -= count * (qaB / q - qa * qB / (q * q));
    hBB -= count * (qBB / q - qB * qB / (q * q));
  }
  ProfileValue out;
  out.value = value;
  out.grad = {ga, beta * gB};
  out.hess = {haa, beta * haB, beta * beta * hBB + beta * gB};
  return out;
}

}  // namespace detail

/// Fits one shape shared by all samples and one scale per sample by maximum likelihood.
///
/// The scales are profiled out analytically, and the shape is found by damped
/// Newton ascent in (alpha, log beta), which keeps beta strictly positive.
inline ShapeFit fit_shared_shape(std::span<const FlowSample> samples, const FitOptions& options = {}) {
  double total_trades = 0.0;
  bool any_quotes = false;
  for (const auto& s : samples) {
    total_trades += s.trade_count();
    any_quotes = any_quotes || !s.quotes.empty();
  }
  if (total_trades <= 0.0) throw NoDataError("no trades to fit");
  if (!any_quotes) throw NoDataError("no quotes to fit");
  for (const auto& s : samples)
    if (s.trade_count() > 0.0 && s.quotes.empty()) throw NoDataError("bucket has trades but no quotes");

  auto finish = [&](const IntensityShape& shape, double grad_norm, int iterations) {
    ShapeFit fit;
    fit.shape = shape;
    fit.gradient_norm = grad_norm;
    fit.iterations = iterations;
    for (const auto& s : samples) {
      const double lambda = s.trade_count() > 0.0 ? analytic_lambda(s, shape) : 0.0;
      fit.lambda_by_size.push_back(lambda);
      fit.log_likelihood += log_likelihood(s, lambda, shape);
    }
    return fit;
  };

  if (options.fixed_shape) return finish(*options.fixed_shape, 0.0, 0);
  if (!(options.initial.beta > 0.0)) throw ValidationError("initial beta must be positive");

  const double tolerance = options.gradient_tolerance * std::max(1.0, total_trades);
  double alpha = options.initial.alpha, b = std::log(options.initial.beta);
  auto current = detail::profile_likelihood(samples, alpha, b);
  for (int it = 0; it < options.max_iterations; ++it) {
    const double gnorm = std::hypot(current.grad[0], current.grad[1]);
    if (gnorm <= tolerance) return finish(IntensityShape{alpha, std::exp(b)}, gnorm, it);

    // Newton direction when the Hessian is negative definite, gradient direction otherwise.
    const auto& h = current.hess;
    const double det = h[0] * h[2] - h[1] * h[1];
    std::array<double, 2> dir;
    if (h[0] < 0.0 && det > 0.0) {
      dir = {-(h[2] * current.grad[0] - h[1] * current.grad[1]) / det,
             -(-h[1] * current.grad[0] + h[0] * current.grad[1]) / det};
    } else {
      const double scale = 1.0 / std::max(1.0, total_trades);
      dir = {current.grad[0] * scale, current.grad[1] * scale};
    }
    // Cap the step in log-beta so exp() cannot blow up on a wild direction.
    const double cap = std::max(std::abs(dir[0]), std::abs(dir[1]));
    if (cap > 2.0) {
      dir[0] *= 2.0 / cap;
      dir[1] *= 2.0 / cap;
    }
    const double slope = dir[0] * current.grad[0] + dir[1] * current.grad[1];
    double step = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls, step *= 0.5) {
      const double na = alpha + step * dir[0], nb = b + step * dir[1];
      const auto trial = detail::profile_likelihood(samples, na, nb);
      // Strict improvement is required so that a stall at round-off level ends the loop below.
      if (std::isfinite(trial.value) && trial.value > current.value && trial.value >= current.value + 1e-4 * step * slope) {
        alpha = na;
        b = nb;
        current = trial;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      // No ascent possible in floating point: accept if already at the optimum.
      const double gn = std::hypot(current.grad[0], current.grad[1]);
      if (gn <= 100.0 * tolerance) return finish(IntensityShape{alpha, std::exp(b)}, gn, it);
      throw NonConvergenceError("line search failed in intensity fit (|grad| = " + std::to_string(gn) + ")");
    }
  }
  throw NonConvergenceError("intensity fit exceeded " + std::to_string(options.max_iterations) + " iterations");
}

/// Maximum-likelihood (λ, α, β) for one bucket.
inline BucketFit fit_mle(const FlowSample& sample, const FitOptions& options = {}) {
  if (sample.trades.empty()) throw NoDataError("bucket has no trades");
  if (sample.quotes.empty()) throw NoDataError("bucket has no quotes");
  const auto fit = fit_shared_shape(std::span<const FlowSample>(&sample, 1), options);
  return BucketFit{fit.lambda_by_size.front(), fit.shape, fit.log_likelihood, fit.gradient_norm, fit.iterations};
}

inline BucketFit fit_mle(std::span<const TradeObservation> trades, std::span<const QuoteObservation> quotes,
                         const SizeLadder& ladder, std::size_t bucket, bool pooled_sides, Side side = Side::bid,
                         const FitOptions& options = {}) {
  const auto sel = pooled_sides ? SideSelection::pooled : (side == Side::bid ? SideSelection::bid : SideSelection::ask);
  return fit_mle(make_sample(trades, quotes, ladder, bucket, sel), options);
}

}  // namespace fxmm
