#pragma once

#include <lapacke.h>

#include <algorithm>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "fxmm/errors.hpp"

namespace fxmm::detail {

// Square banded matrix in LAPACK general-band storage, solved with dgbsv.
class BandedSystem {
 public:
  BandedSystem(std::size_t n, std::size_t lower, std::size_t upper)
      : n_(n), kl_(lower), ku_(upper), ldab_(2 * lower + upper + 1), ab_(ldab_ * n), ipiv_(n) {}

  void clear() { std::fill(ab_.begin(), ab_.end(), 0.0); }

  void add(std::size_t row, std::size_t col, double value) { ab_[kl_ + ku_ + row - col + col * ldab_] += value; }

  /// Solves in place; the matrix is destroyed by the factorization.
  void solve(std::span<double> rhs) {
    const lapack_int info =
        LAPACKE_dgbsv(LAPACK_COL_MAJOR, static_cast<lapack_int>(n_), static_cast<lapack_int>(kl_),
                      static_cast<lapack_int>(ku_), 1, ab_.data(), static_cast<lapack_int>(ldab_), ipiv_.data(),
                      rhs.data(), static_cast<lapack_int>(n_));
    if (info != 0) throw NumericError("banded solve failed (dgbsv info = " + std::to_string(info) + ")");
  }

 private:
  std::size_t n_, kl_, ku_, ldab_;
  std::vector<double> ab_;
  std::vector<lapack_int> ipiv_;
};

}  // namespace fxmm::detail
