#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "fxmm/errors.hpp"

namespace fxmm {

// Sides are always taken from the dealer's viewpoint: on the bid the dealer buys.
enum class Side { bid, ask };

inline const char* to_string(Side side) { return side == Side::bid ? "bid" : "ask"; }

/// log(1 + e^x) without overflow.
inline double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

/// 1 / (1 + e^x) without overflow.
inline double logistic_complement(double x) {
  if (x > 0.0) {
    const double e = std::exp(-x);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(x));
}

/// Trade sizes (M€) for which a pricing ladder is streamed.
struct SizeLadder {
  std::vector<double> sizes;

  static SizeLadder standard() { return SizeLadder{{1.0, 2.0, 5.0, 10.0, 20.0, 50.0}}; }

  [[nodiscard]] std::size_t size() const noexcept { return sizes.size(); }
  [[nodiscard]] double operator[](std::size_t k) const { return sizes.at(k); }

  void validate() const {
    if (sizes.empty()) throw ValidationError("size ladder is empty");
    for (std::size_t k = 0; k < sizes.size(); ++k) {
      if (!(sizes[k] > 0.0) || !std::isfinite(sizes[k]))
        throw ValidationError("size ladder entries must be positive and finite");
      if (k > 0 && !(sizes[k] > sizes[k - 1]))
        throw ValidationError("size ladder must be strictly increasing");
    }
  }
};

/// Index of the ladder size closest to `size_meur`. Midpoint ties go to the lower index.
inline std::size_t bucket_trade(double size_meur, const SizeLadder& ladder) {
  if (!(size_meur > 0.0)) throw ValidationError("trade size must be positive");
  std::size_t best = 0;
  double best_distance = std::abs(size_meur - ladder.sizes.front());
  for (std::size_t k = 1; k < ladder.size(); ++k) {
    const double d = std::abs(size_meur - ladder.sizes[k]);
    if (d < best_distance) {
      best = k;
      best_distance = d;
    }
  }
  return best;
}

/// Logistic shape of the trading probability f(δ) = 1 / (1 + exp(alpha + beta δ)), δ in bps.
struct IntensityShape {
  double alpha = 0.0;
  double beta = 1.0;  // bps^-1

  [[nodiscard]] double fill_probability(double quote_bps) const {
    return logistic_complement(alpha + beta * quote_bps);
  }
  [[nodiscard]] double log_fill_probability(double quote_bps) const {
    return -softplus(alpha + beta * quote_bps);
  }

  friend bool operator==(const IntensityShape&, const IntensityShape&) = default;
};

/// Arrival model for one client tier: shared shape, one scale per ladder size (day^-1).
struct TierIntensity {
  IntensityShape shape;
  std::vector<double> lambda_by_size;

  [[nodiscard]] double intensity(std::size_t k, double quote_bps) const {
    return lambda_by_size.at(k) * shape.fill_probability(quote_bps);
  }

  void validate(std::size_t ladder_size) const {
    if (lambda_by_size.size() != ladder_size)
      throw ValidationError("tier has " + std::to_string(lambda_by_size.size()) +
                            " scales but the ladder has " + std::to_string(ladder_size) + " sizes");
    for (double l : lambda_by_size)
      if (!(l >= 0.0) || !std::isfinite(l)) throw ValidationError("tier scales must be finite and >= 0");
    if (!std::isfinite(shape.alpha) || !std::isfinite(shape.beta))
      throw ValidationError("tier shape must be finite");
    if (shape.beta < 0.0) throw ValidationError("tier beta must be >= 0");
  }
};

/// Scales λ·w_k for a total flow λ split by the size weights w.
inline std::vector<double> scaled_weights(double lambda, const std::vector<double>& weights) {
  std::vector<double> out(weights.size());
  std::transform(weights.begin(), weights.end(), out.begin(), [lambda](double w) { return lambda * w; });
  return out;
}

inline const std::vector<double>& standard_size_weights() {
  static const std::vector<double> w{0.4, 0.25, 0.19, 0.1, 0.05, 0.01};
  return w;
}

/// The two EURUSD tiers used throughout the numerical study: λ = 1800/day split by the standard weights.
inline std::vector<TierIntensity> standard_tiers(double lambda = 1800.0) {
  return {
      TierIntensity{IntensityShape{-0.3, 5.0}, scaled_weights(lambda, standard_size_weights())},
      TierIntensity{IntensityShape{-1.9, 15.0}, scaled_weights(lambda, standard_size_weights())},
  };
}

}  // namespace fxmm
