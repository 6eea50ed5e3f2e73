#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "fxmm/errors.hpp"
#include "fxmm/intensity.hpp"

namespace fxmm {

/// Execution cost L(v) = eta v² + phi |v| (bps) for an external trading rate v (M€/day).
struct ExecutionCost {
  double eta = 1e-5;  // bps·day·(M€)^-1
  double phi = 0.1;   // bps

  void validate() const {
    if (!(eta > 0.0) || !std::isfinite(eta)) throw ValidationError("execution cost eta must be positive");
    if (!(phi >= 0.0) || !std::isfinite(phi)) throw ValidationError("execution cost phi must be >= 0");
  }
};

inline double cost_L(double v, const ExecutionCost& cost) { return cost.eta * v * v + cost.phi * std::abs(v); }

struct ExecHamiltonianValue {
  double value = 0.0;       // sup_v (v p - L(v))
  double derivative = 0.0;  // the maximizing rate, M€/day
};

/// Legendre transform of L in closed form: max(0, |p| - phi)² / (4 eta), derivative (1/2eta) sign(p) max(0, |p| - phi).
inline ExecHamiltonianValue exec_hamiltonian(double p, const ExecutionCost& cost) {
  const double excess = std::max(0.0, std::abs(p) - cost.phi);
  const double rate = excess / (2.0 * cost.eta);
  return {excess * excess / (4.0 * cost.eta), p < 0.0 ? -rate : rate};
}

struct ClientHamiltonianValue {
  double value = 0.0;          // H(p)
  double derivative = 0.0;     // H'(p) = -f(δ*)
  double optimal_quote = 0.0;  // δ*(p), bps
};

/// H(p) = sup_δ f(δ)(δ - p) for a logistic fill probability f.
///
/// The first-order condition δ = p + 1 / (beta (1 - f(δ))) is solved in the
/// scaled margin w = beta (δ - p) - 1, where it reads w + log w = -alpha - beta p - 1
/// (so w is a Lambert-W value). At the optimum f(δ*) = w / (1 + w) and H = w / beta.
class ClientHamiltonian {
 public:
  explicit ClientHamiltonian(IntensityShape shape) : shape_(shape) {
    if (!(shape.beta > 0.0) || !std::isfinite(shape.beta))
      throw UnboundedHamiltonianError("beta must be positive (got " + std::to_string(shape.beta) + ")");
  }

  [[nodiscard]] const IntensityShape& shape() const noexcept { return shape_; }

  /// Scaled margin w(p) > 0.
  [[nodiscard]] double scaled_margin(double p) const {
    const double s = -shape_.alpha - shape_.beta * p - 1.0;  // log of the Lambert-W argument
    if (s < -700.0) return std::exp(s);                      // w e^w = e^s with w ~ e^s
    // W(y) <= log(1 + y) and W(y) >= y / (1 + y) bracket the root.
    double hi = softplus(s);
    double lo = std::exp(s - hi);
    auto residual = [s](double w) { return w + std::log(w) - s; };
    double w = lo;
    for (int it = 0; it < 100; ++it) {
      const double r = residual(w);
      if (r == 0.0) return w;
      if (r < 0.0)
        lo = w;
      else
        hi = w;
      double next = w - r / (1.0 + 1.0 / w);
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      if (std::abs(next - w) <= 1e-15 * std::max(1.0, w)) return next;
      w = next;
    }
    throw NonConvergenceError("optimal quote root-finder at p = " + std::to_string(p));
  }

  [[nodiscard]] ClientHamiltonianValue evaluate(double p) const {
    const double w = scaled_margin(p);
    return {w / shape_.beta, -w / (1.0 + w), p + (1.0 + w) / shape_.beta};
  }

  [[nodiscard]] double value(double p) const { return scaled_margin(p) / shape_.beta; }
  [[nodiscard]] double optimal_quote(double p) const { return p + (1.0 + scaled_margin(p)) / shape_.beta; }

 private:
  IntensityShape shape_;
};

inline ClientHamiltonianValue client_hamiltonian(double p, const ClientHamiltonian& h) { return h.evaluate(p); }

}  // namespace fxmm
