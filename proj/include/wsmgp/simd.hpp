#pragma once

#include <cstddef>
#include <span>
#include <string_view>

// Data-parallel inner loops of kernel assembly and its gradient chain. Each
// primitive has a portable scalar reference and an AVX2/FMA variant; the
// active backend is chosen once at startup from CPUID (override with
// WSMGP_SIMD=scalar) and can be switched explicitly for equivalence testing.
//
// Inputs are column-major: coordinate k of point j lives at cols[k * ld + j].

namespace wsmgp::simd {

enum class Backend { Scalar, Avx2 };

bool avx2_available();
Backend active_backend();
void set_backend(Backend b);
std::string_view backend_name(Backend b);

// out[j] = scale * exp(-0.5 * sum_k prec[k] * (cols[k*ld + j] - center[k])^2)
using GaussRowFn = void (*)(std::span<const double> center, const double* cols, std::size_t ld,
                            std::size_t n, std::span<const double> prec, double scale, double* out);

// With g_j the unit-scale Gaussian above: returns sum_j w[j] g_j and writes
// moments[k] = sum_j w[j] g_j (cols[k*ld + j] - center[k])^2.
using GaussMomentsFn = double (*)(std::span<const double> center, const double* cols,
                                  std::size_t ld, std::size_t n, std::span<const double> prec,
                                  const double* w, std::span<double> moments);

void gauss_row(std::span<const double> center, const double* cols, std::size_t ld, std::size_t n,
               std::span<const double> prec, double scale, double* out);
double gauss_moments(std::span<const double> center, const double* cols, std::size_t ld,
                     std::size_t n, std::span<const double> prec, const double* w,
                     std::span<double> moments);

namespace scalar {
void gauss_row(std::span<const double> center, const double* cols, std::size_t ld, std::size_t n,
               std::span<const double> prec, double scale, double* out);
double gauss_moments(std::span<const double> center, const double* cols, std::size_t ld,
                     std::size_t n, std::span<const double> prec, const double* w,
                     std::span<double> moments);
}  // namespace scalar

namespace avx2 {
void gauss_row(std::span<const double> center, const double* cols, std::size_t ld, std::size_t n,
               std::span<const double> prec, double scale, double* out);
double gauss_moments(std::span<const double> center, const double* cols, std::size_t ld,
                     std::size_t n, std::span<const double> prec, const double* w,
                     std::span<double> moments);
}  // namespace avx2

}  // namespace wsmgp::simd
