#include "wsmgp/simd.hpp"

#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

using namespace wsmgp;

namespace {

struct Case {
  std::vector<double> center, cols, prec, w;
  std::size_t d = 1, n = 1;
};

Case make_case(std::mt19937_64& rng, std::size_t d, std::size_t n) {
  std::uniform_real_distribution<double> u(-1.0, 1.0), p(0.5, 80.0);
  Case c;
  c.d = d;
  c.n = n;
  for (std::size_t k = 0; k < d; ++k) c.center.push_back(u(rng));
  for (std::size_t i = 0; i < d * n; ++i) c.cols.push_back(u(rng));
  for (std::size_t k = 0; k < d; ++k) c.prec.push_back(p(rng));
  for (std::size_t j = 0; j < n; ++j) c.w.push_back(u(rng));
  return c;
}

// Direct evaluation, independent of both backends.
double naive_gauss(const Case& c, std::size_t j) {
  double q = 0.0;
  for (std::size_t k = 0; k < c.d; ++k) {
    const double t = c.cols[k * c.n + j] - c.center[k];
    q += c.prec[k] * t * t;
  }
  return std::exp(-0.5 * q);
}

}  // namespace

TEST_CASE("scalar gauss_row matches direct evaluation") {
  std::mt19937_64 rng(3);
  for (std::size_t d : {1u, 2u, 3u}) {
    const Case c = make_case(rng, d, 13);
    std::vector<double> out(c.n);
    simd::scalar::gauss_row(c.center, c.cols.data(), c.n, c.n, c.prec, 2.5, out.data());
    for (std::size_t j = 0; j < c.n; ++j) CHECK(out[j] == doctest::Approx(2.5 * naive_gauss(c, j)).epsilon(1e-14));
  }
}

TEST_CASE("scalar gauss_moments matches direct evaluation") {
  std::mt19937_64 rng(4);
  const Case c = make_case(rng, 2, 9);
  std::vector<double> mom(2);
  const double s = simd::scalar::gauss_moments(c.center, c.cols.data(), c.n, c.n, c.prec, c.w.data(), mom);
  double s0 = 0.0, m0 = 0.0, m1 = 0.0;
  for (std::size_t j = 0; j < c.n; ++j) {
    const double g = c.w[j] * naive_gauss(c, j);
    s0 += g;
    m0 += g * std::pow(c.cols[j] - c.center[0], 2);
    m1 += g * std::pow(c.cols[c.n + j] - c.center[1], 2);
  }
  CHECK(s == doctest::Approx(s0).epsilon(1e-13));
  CHECK(mom[0] == doctest::Approx(m0).epsilon(1e-13));
  CHECK(mom[1] == doctest::Approx(m1).epsilon(1e-13));
}

TEST_CASE("avx2 kernels agree with the scalar reference") {
  if (!simd::avx2_available()) {
    MESSAGE("AVX2/FMA not available on this CPU; equivalence test skipped");
    return;
  }
  std::mt19937_64 rng(5);
  // Sizes around the 4-lane width exercise the remainder loop.
  for (std::size_t d : {1u, 2u, 4u})
    for (std::size_t n : {1u, 3u, 4u, 5u, 8u, 17u, 64u}) {
      const Case c = make_case(rng, d, n);
      std::vector<double> a(n), b(n);
      simd::scalar::gauss_row(c.center, c.cols.data(), n, n, c.prec, 1.7, a.data());
      simd::avx2::gauss_row(c.center, c.cols.data(), n, n, c.prec, 1.7, b.data());
      for (std::size_t j = 0; j < n; ++j) CHECK(b[j] == doctest::Approx(a[j]).epsilon(1e-12));

      std::vector<double> ma(d), mb(d);
      const double sa = simd::scalar::gauss_moments(c.center, c.cols.data(), n, n, c.prec, c.w.data(), ma);
      const double sb = simd::avx2::gauss_moments(c.center, c.cols.data(), n, n, c.prec, c.w.data(), mb);
      CHECK(sb == doctest::Approx(sa).epsilon(1e-12).scale(1.0));
      for (std::size_t k = 0; k < d; ++k) CHECK(mb[k] == doctest::Approx(ma[k]).epsilon(1e-12).scale(1.0));
    }
}

TEST_CASE("leading dimension larger than n") {
  std::mt19937_64 rng(6);
  const Case c = make_case(rng, 2, 11);
  // Points 0..6 of an 11-row column-major block.
  std::vector<double> a(7), b(7);
  simd::scalar::gauss_row(c.center, c.cols.data(), 11, 7, c.prec, 1.0, a.data());
  for (std::size_t j = 0; j < 7; ++j) CHECK(a[j] == doctest::Approx(naive_gauss(c, j)).epsilon(1e-14));
  if (simd::avx2_available()) {
    simd::avx2::gauss_row(c.center, c.cols.data(), 11, 7, c.prec, 1.0, b.data());
    for (std::size_t j = 0; j < 7; ++j) CHECK(b[j] == doctest::Approx(a[j]).epsilon(1e-12));
  }
}

TEST_CASE("backend switch") {
  const simd::Backend saved = simd::active_backend();
  simd::set_backend(simd::Backend::Scalar);
  CHECK(simd::active_backend() == simd::Backend::Scalar);
  CHECK(simd::backend_name(simd::Backend::Scalar) == "scalar");
  simd::set_backend(simd::Backend::Avx2);
  CHECK(simd::active_backend() == (simd::avx2_available() ? simd::Backend::Avx2 : simd::Backend::Scalar));
  simd::set_backend(saved);
}
