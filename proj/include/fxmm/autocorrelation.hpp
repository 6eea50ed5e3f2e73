#pragma once

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include "fxmm/errors.hpp"

namespace fxmm {

namespace detail {
// The FFTW planner is not thread-safe; plan execution is.
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};
}  // namespace detail

/// Sample autocorrelation of a scalar series via zero-padded FFT.
///
/// Uses the unbiased lag estimator c(l) = Σ (x_t − x̄)(x_{t+l} − x̄) / (N − l),
/// normalized by c(0). Plans are cached per padded length; an instance must
/// not be shared between threads.
class Autocorrelator {
 public:
  Autocorrelator() = default;
  Autocorrelator(const Autocorrelator&) = delete;
  Autocorrelator& operator=(const Autocorrelator&) = delete;
  ~Autocorrelator() { reset(); }

  /// ρ(0..max_lag); empty when the series has zero variance.
  std::vector<double> operator()(std::span<const double> x, std::size_t max_lag) {
    const std::size_t n = x.size();
    if (n < 2) return {};
    max_lag = std::min(max_lag, n - 1);
    ensure(n);
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= double(n);
    for (std::size_t i = 0; i < n; ++i) real_.get()[i] = x[i] - mean;
    std::fill(real_.get() + n, real_.get() + padded_, 0.0);
    fftw_execute(forward_);
    const std::size_t half = padded_ / 2 + 1;
    for (std::size_t i = 0; i < half; ++i) {
      const double re = spectrum_.get()[i][0], im = spectrum_.get()[i][1];
      spectrum_.get()[i][0] = re * re + im * im;
      spectrum_.get()[i][1] = 0.0;
    }
    fftw_execute(backward_);
    const double c0 = real_.get()[0] / double(padded_) / double(n);
    if (!(c0 > 0.0)) return {};
    std::vector<double> rho(max_lag + 1);
    for (std::size_t l = 0; l <= max_lag; ++l)
      rho[l] = real_.get()[l] / double(padded_) / double(n - l) / c0;
    return rho;
  }

 private:
  void ensure(std::size_t n) {
    std::size_t padded = 1;
    while (padded < 2 * n) padded <<= 1;
    if (padded == padded_) return;
    reset();
    padded_ = padded;
    real_.reset(fftw_alloc_real(padded));
    spectrum_.reset(fftw_alloc_complex(padded / 2 + 1));
    std::lock_guard lock(detail::fftw_planner_mutex());
    forward_ = fftw_plan_dft_r2c_1d(static_cast<int>(padded), real_.get(), spectrum_.get(), FFTW_ESTIMATE);
    backward_ = fftw_plan_dft_c2r_1d(static_cast<int>(padded), spectrum_.get(), real_.get(), FFTW_ESTIMATE);
  }
  void reset() {
    std::lock_guard lock(detail::fftw_planner_mutex());
    if (forward_) fftw_destroy_plan(forward_);
    if (backward_) fftw_destroy_plan(backward_);
    forward_ = backward_ = nullptr;
    padded_ = 0;
  }

  std::size_t padded_ = 0;
  std::unique_ptr<double, detail::FftwFree> real_;
  std::unique_ptr<fftw_complex, detail::FftwFree> spectrum_;
  fftw_plan forward_ = nullptr;
  fftw_plan backward_ = nullptr;
};

/// Trapezoidal integral of an ACF sampled every `interval`, from lag 0 up to its first non-positive value.
inline double integrate_acf(std::span<const double> rho, double interval) {
  double total = 0.0;
  for (std::size_t l = 0; l + 1 < rho.size(); ++l) {
    total += 0.5 * (rho[l] + std::max(rho[l + 1], 0.0)) * interval;
    if (rho[l + 1] <= 0.0) break;
  }
  return total;
}

/// Mean over paths of the per-path ACFs; paths with zero variance are skipped.
inline std::vector<double> mean_acf(std::span<const std::vector<double>> per_path) {
  std::size_t len = 0, used = 0;
  for (const auto& a : per_path)
    if (!a.empty()) len = len == 0 ? a.size() : std::min(len, a.size());
  std::vector<double> mean(len, 0.0);
  for (const auto& a : per_path) {
    if (a.empty()) continue;
    ++used;
    for (std::size_t l = 0; l < len; ++l) mean[l] += a[l];
  }
  if (used > 0)
    for (double& m : mean) m /= double(used);
  return mean;
}

constexpr double minutes_per_day = 1440.0;
constexpr std::size_t min_stationary_samples = 100;

/// Risk-neutralization time in minutes: integral of the path-averaged inventory ACF.
///
/// `series` holds the stationary (post burn-in) inventory samples of each path,
/// taken every `interval` days.
inline double risk_neutralization_time(std::span<const std::vector<double>> series, double interval,
                                       std::size_t max_lag = 5000) {
  if (!(interval > 0.0)) throw ValidationError("sampling interval must be positive");
  Autocorrelator acf;
  std::vector<std::vector<double>> per_path;
  per_path.reserve(series.size());
  for (const auto& s : series) {
    if (s.size() < min_stationary_samples)
      throw InsufficientDataError("stationary segment has " + std::to_string(s.size()) + " samples (need " +
                                  std::to_string(min_stationary_samples) + ")");
    per_path.push_back(acf(s, max_lag));
  }
  if (per_path.empty()) throw InsufficientDataError("no inventory paths");
  const auto rho = mean_acf(per_path);
  return integrate_acf(rho, interval) * minutes_per_day;
}

}  // namespace fxmm
