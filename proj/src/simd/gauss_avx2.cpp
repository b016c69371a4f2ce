#include "wsmgp/simd.hpp"

#include <cmath>

#if defined(WSMGP_HAVE_AVX2_TU) && defined(__AVX2__) && defined(__FMA__)
#include <immintrin.h>
#define WSMGP_AVX2_BODY 1
#endif

namespace wsmgp::simd::avx2 {

#ifdef WSMGP_AVX2_BODY

namespace {

// exp(x) for x <= 0. Cody-Waite reduction against ln2 then a degree-13 Taylor
// polynomial on |r| <= ln2/2; relative error stays within a few ulp. Inputs
// below -708 flush to zero.
inline __m256d exp_nonpositive(__m256d x) {
  const __m256d log2e = _mm256_set1_pd(1.4426950408889634074);
  const __m256d ln2_hi = _mm256_set1_pd(6.93145751953125e-1);
  const __m256d ln2_lo = _mm256_set1_pd(1.42860682030941723212e-6);
  const __m256d lower = _mm256_set1_pd(-708.0);

  const __m256d underflow = _mm256_cmp_pd(x, lower, _CMP_LT_OQ);
  x = _mm256_max_pd(x, lower);

  const __m256d n = _mm256_round_pd(_mm256_mul_pd(x, log2e), _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(n, ln2_hi, x);
  r = _mm256_fnmadd_pd(n, ln2_lo, r);

  __m256d p = _mm256_set1_pd(1.0 / 6227020800.0);
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 479001600.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 39916800.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 3628800.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 362880.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 40320.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 5040.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 720.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 120.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 24.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 6.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(0.5));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0));

  // 2^n through the exponent field; n >= -1022 holds after the clamp above.
  const __m256d magic = _mm256_set1_pd(6755399441055744.0);  // 2^52 + 2^51
  __m256i ni = _mm256_sub_epi64(_mm256_castpd_si256(_mm256_add_pd(n, magic)),
                                _mm256_castpd_si256(magic));
  ni = _mm256_slli_epi64(_mm256_add_epi64(ni, _mm256_set1_epi64x(1023)), 52);
  const __m256d result = _mm256_mul_pd(p, _mm256_castsi256_pd(ni));
  return _mm256_andnot_pd(underflow, result);
}

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

}  // namespace

void gauss_row(std::span<const double> center, const double* cols, std::size_t ld, std::size_t n,
               std::span<const double> prec, double scale, double* out) {
  const std::size_t d = center.size();
  const __m256d vscale = _mm256_set1_pd(scale);
  const __m256d mhalf = _mm256_set1_pd(-0.5);
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    __m256d q = _mm256_setzero_pd();
    for (std::size_t k = 0; k < d; ++k) {
      const __m256d t = _mm256_sub_pd(_mm256_loadu_pd(cols + k * ld + j), _mm256_set1_pd(center[k]));
      q = _mm256_fmadd_pd(_mm256_mul_pd(_mm256_set1_pd(prec[k]), t), t, q);
    }
    _mm256_storeu_pd(out + j, _mm256_mul_pd(vscale, exp_nonpositive(_mm256_mul_pd(mhalf, q))));
  }
  for (; j < n; ++j) {
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
  constexpr std::size_t kMaxDimVec = 8;
  __m256d macc[kMaxDimVec];
  const bool vec_moments = d <= kMaxDimVec;
  for (std::size_t k = 0; k < d; ++k) moments[k] = 0.0;
  if (vec_moments)
    for (std::size_t k = 0; k < d; ++k) macc[k] = _mm256_setzero_pd();

  const __m256d mhalf = _mm256_set1_pd(-0.5);
  __m256d total = _mm256_setzero_pd();
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    __m256d q = _mm256_setzero_pd();
    for (std::size_t k = 0; k < d; ++k) {
      const __m256d t = _mm256_sub_pd(_mm256_loadu_pd(cols + k * ld + j), _mm256_set1_pd(center[k]));
      q = _mm256_fmadd_pd(_mm256_mul_pd(_mm256_set1_pd(prec[k]), t), t, q);
    }
    const __m256d wg = _mm256_mul_pd(_mm256_loadu_pd(w + j), exp_nonpositive(_mm256_mul_pd(mhalf, q)));
    total = _mm256_add_pd(total, wg);
    for (std::size_t k = 0; k < d; ++k) {
      const __m256d t = _mm256_sub_pd(_mm256_loadu_pd(cols + k * ld + j), _mm256_set1_pd(center[k]));
      const __m256d c = _mm256_mul_pd(_mm256_mul_pd(wg, t), t);
      if (vec_moments) {
        macc[k] = _mm256_add_pd(macc[k], c);
      } else {
        moments[k] += hsum(c);
      }
    }
  }
  double tot = hsum(total);
  if (vec_moments)
    for (std::size_t k = 0; k < d; ++k) moments[k] += hsum(macc[k]);
  for (; j < n; ++j) {
    double q = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      const double t = cols[k * ld + j] - center[k];
      q += prec[k] * t * t;
    }
    const double wg = w[j] * std::exp(-0.5 * q);
    tot += wg;
    for (std::size_t k = 0; k < d; ++k) {
      const double t = cols[k * ld + j] - center[k];
      moments[k] += wg * t * t;
    }
  }
  return tot;
}

#else  // no AVX2 translation unit: forward to the reference path

void gauss_row(std::span<const double> center, const double* cols, std::size_t ld, std::size_t n,
               std::span<const double> prec, double scale, double* out) {
  scalar::gauss_row(center, cols, ld, n, prec, scale, out);
}

double gauss_moments(std::span<const double> center, const double* cols, std::size_t ld,
                     std::size_t n, std::span<const double> prec, const double* w,
                     std::span<double> moments) {
  return scalar::gauss_moments(center, cols, ld, n, prec, w, moments);
}

#endif

}  // namespace wsmgp::simd::avx2
