#include "wsmgp/simd.hpp"

#include <cmath>

namespace wsmgp::simd::scalar {

void gauss_row(std::span<const double> center, const double* cols, std::size_t ld, std::size_t n,
               std::span<const double> prec, double scale, double* out) {
  const std::size_t d = center.size();
  for (std::size_t j = 0; j < n; ++j) {
    double q = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      const double t = cols[k * ld + j] - center[k];
      q += prec[k] * t * t;
    }
    out[j] = scale * std::exp(-0.5 * q);
  }
}

double gauss_moments(std::span<const double> center, const double* cols, std::size_t ld,
                     std::size_t n, std::span<const double> prec, const double* w,
                     std::span<double> moments) {
  const std::size_t d = center.size();
  for (std::size_t k = 0; k < d; ++k) moments[k] = 0.0;
  double total = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    double q = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      const double t = cols[k * ld + j] - center[k];
      q += prec[k] * t * t;
    }
    const double wg = w[j] * std::exp(-0.5 * q);
    total += wg;
    for (std::size_t k = 0; k < d; ++k) {
      const double t = cols[k * ld + j] - center[k];
      moments[k] += wg * t * t;
    }
  }
  return total;
}

}  // namespace wsmgp::simd::scalar
