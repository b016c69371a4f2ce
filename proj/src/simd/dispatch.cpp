#include "wsmgp/simd.hpp"

#include <atomic>
#include <cstdlib>
#include <cstring>

namespace wsmgp::simd {

bool avx2_available() {
#if defined(WSMGP_HAVE_AVX2_TU) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

namespace {

Backend detect() {
  if (const char* env = std::getenv("WSMGP_SIMD"); env && std::strcmp(env, "scalar") == 0)
    return Backend::Scalar;
  return avx2_available() ? Backend::Avx2 : Backend::Scalar;
}

std::atomic<Backend>& current() {
  static std::atomic<Backend> b{detect()};
  return b;
}

}  // namespace

Backend active_backend() { return current().load(std::memory_order_relaxed); }

void set_backend(Backend b) {
  if (b == Backend::Avx2 && !avx2_available()) b = Backend::Scalar;
  current().store(b, std::memory_order_relaxed);
}

std::string_view backend_name(Backend b) { return b == Backend::Avx2 ? "avx2" : "scalar"; }

void gauss_row(std::span<const double> center, const double* cols, std::size_t ld, std::size_t n,
               std::span<const double> prec, double scale, double* out) {
  if (active_backend() == Backend::Avx2)
    avx2::gauss_row(center, cols, ld, n, prec, scale, out);
  else
    scalar::gauss_row(center, cols, ld, n, prec, scale, out);
}

double gauss_moments(std::span<const double> center, const double* cols, std::size_t ld,
                     std::size_t n, std::span<const double> prec, const double* w,
                     std::span<double> moments) {
  if (active_backend() == Backend::Avx2)
    return avx2::gauss_moments(center, cols, ld, n, prec, w, moments);
  return scalar::gauss_moments(center, cols, ld, n, prec, w, moments);
}

}  // namespace wsmgp::simd
