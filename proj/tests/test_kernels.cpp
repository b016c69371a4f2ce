#include "wsmgp/kernels.hpp"
#include "wsmgp/simd.hpp"

#include <doctest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <Eigen/Eigenvalues>
#include <cmath>
#include <numbers>
#include <random>

using namespace wsmgp;

namespace {

Vec v1(double x) { return Vec::Constant(1, x); }

LatentKernelParams latent(double L) { return {v1(L)}; }
OutputKernelParams output(double S, double Lm) { return {S, v1(Lm)}; }

double integrate(const std::function<double(double)>& f, double a, double b) {
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 15, 1e-13);
}

double smoothing(double tau, double S, double Lm) {
  return S * std::sqrt(Lm / (2.0 * std::numbers::pi)) * std::exp(-0.5 * Lm * tau * tau);
}

HyperParams random_hp(std::mt19937_64& rng, Index M, Index Q) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  HyperParams hp;
  hp.latent = latent(std::exp(std::log(5.0) + u(rng) * std::log(40.0)));
  for (Index m = 0; m < M; ++m) hp.outputs.push_back(output(1.0 + 4.0 * u(rng), 20.0 + 200.0 * u(rng)));
  hp.noise.sigma = Vec::Constant(M, 0.3);
  hp.inducing.W = Mat(Q, 1);
  for (Index q = 0; q < Q; ++q) hp.inducing.W(q, 0) = -1.0 + 2.0 * u(rng);
  return hp;
}

}  // namespace

TEST_CASE("latent kernel values") {
  CHECK(eval_kuu(v1(0.3), v1(0.3), latent(100.0)) == 1.0);
  CHECK(eval_kuu(v1(0.0), v1(0.1), latent(100.0)) == doctest::Approx(0.606531).epsilon(1e-6));
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int i = 0; i < 20; ++i) {
    const Vec a = v1(u(rng)), b = v1(u(rng));
    CHECK(eval_kuu(a, b, latent(7.0)) == eval_kuu(b, a, latent(7.0)));
  }
}

TEST_CASE("smoothing kernel values") {
  CHECK(eval_smoothing(v1(0.37), output(0.0, 120.0)) == 0.0);
  CHECK(eval_smoothing(v1(0.0), output(4.0, 120.0)) == doctest::Approx(17.4809).epsilon(1e-5));
  CHECK(eval_smoothing(v1(0.05), output(4.0, 120.0)) == doctest::Approx(eval_smoothing(v1(-0.05), output(4.0, 120.0))));
}

TEST_CASE("cross covariance f-u against quadrature") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double S = 4.0, Lm = 120.0, L = 100.0;
  for (int i = 0; i < 20; ++i) {
    const double x = u(rng), w = u(rng);
    const double h = 12.0 / std::sqrt(std::min(Lm, L));
    const double ref = integrate([&](double z) { return smoothing(x - z, S, Lm) * std::exp(-0.5 * L * (z - w) * (z - w)); },
                                 std::min(x, w) - h, std::max(x, w) + h);
    const double got = eval_cross_fu(v1(x), v1(w), output(S, Lm), latent(L));
    CHECK(std::abs(got - ref) <= 1e-6 * std::max(std::abs(ref), 1e-300));
  }
  const double a = eval_cross_fu(v1(0.2), v1(0.1), output(4.0, Lm), latent(L));
  CHECK(eval_cross_fu(v1(0.2), v1(0.1), output(8.0, Lm), latent(L)) == doctest::Approx(2.0 * a));
  CHECK(eval_cross_fu(v1(0.1), v1(0.2), output(4.0, Lm), latent(L)) == doctest::Approx(a));
}

TEST_CASE("cross covariance f-f against nested quadrature") {
  const double S1 = 4.0, L1 = 120.0, S2 = 5.0, L2 = 200.0, L = 100.0;
  for (const auto& [x, x2] : {std::pair{0.1, -0.05}, std::pair{0.0, 0.0}, std::pair{-0.3, -0.2}}) {
    const double h1 = 12.0 / std::sqrt(L1), h2 = 12.0 / std::sqrt(L2);
    const double ref = integrate(
        [&](double z) {
          const double inner = integrate(
              [&](double z2) { return smoothing(x2 - z2, S2, L2) * std::exp(-0.5 * L * (z - z2) * (z - z2)); },
              x2 - h2, x2 + h2);
          return smoothing(x - z, S1, L1) * inner;
        },
        x - h1, x + h1);
    const double got = eval_cross_ff(v1(x), v1(x2), output(S1, L1), output(S2, L2), latent(L));
    CHECK(std::abs(got - ref) <= 1e-6 * std::abs(ref));
  }
  CHECK(eval_cross_ff(v1(0.1), v1(0.4), output(0.0, L1), output(S2, L2), latent(L)) == 0.0);
  const auto o = output(3.0, 50.0);
  CHECK(eval_cross_ff(v1(0.1), v1(0.4), o, o, latent(L)) == doctest::Approx(eval_cross_ff(v1(0.4), v1(0.1), o, o, latent(L))));
}

TEST_CASE("prior variance equals the diagonal of k_ff") {
  HyperParams hp;
  hp.latent = latent(100.0);
  hp.outputs = {output(4.0, 120.0), output(5.0, 200.0)};
  hp.noise.sigma = Vec::Constant(2, 0.25);
  hp.inducing.W = Mat::Zero(1, 1);
  for (Index m = 0; m < 2; ++m)
    CHECK(prior_variance(m, hp) ==
          doctest::Approx(eval_cross_ff(v1(0.3), v1(0.3), hp.outputs[m], hp.outputs[m], hp.latent)));
}

TEST_CASE("assembled block shapes") {
  std::mt19937_64 rng(3);
  const HyperParams hp = random_hp(rng, 2, 4);
  const Mat X = Mat::Random(7, 1);
  const CovBlocks cov = assemble_cov(X, hp);
  CHECK(cov.Kuu.rows() == 4);
  CHECK(cov.Kuu.cols() == 4);
  CHECK(cov.Kfu.rows() == 14);
  CHECK(cov.Kfu.cols() == 4);
  REQUIRE(cov.Kff.size() == 2);
  REQUIRE(cov.B.size() == 2);
  for (Index m = 0; m < 2; ++m) {
    CHECK(cov.Kff[m].rows() == 7);
    CHECK(cov.B[m].cols() == 7);
  }
}

TEST_CASE("Nystrom residual vanishes when inducing inputs coincide with near-delta smoothing") {
  // With L_m very large, f is the latent process itself and W = X interpolates exactly.
  HyperParams hp;
  hp.latent = latent(9.0);
  hp.outputs = {output(1.0, 1e10)};
  hp.noise.sigma = Vec::Constant(1, 0.1);
  Mat X(6, 1);
  X << -1.0, -0.6, -0.2, 0.2, 0.6, 1.0;
  hp.inducing.W = X;
  const CovBlocks cov = assemble_cov(X, hp);
  CHECK(cov.B[0].cwiseAbs().maxCoeff() <= 1e-8 * cov.Kff[0].diagonal().maxCoeff());
}

TEST_CASE("approximate covariance is PSD on random instances") {
  std::mt19937_64 rng(4);
  for (int i = 0; i < 10; ++i) {
    const HyperParams hp = random_hp(rng, 2, 4);
    Mat X(10, 1);
    for (Index n = 0; n < 10; ++n) X(n, 0) = std::uniform_real_distribution<double>(-1.0, 1.0)(rng);
    const CovBlocks cov = assemble_cov(X, hp);
    Mat K = cov.Kfu * cov.KuuChol.solve(cov.Kfu.transpose());
    for (Index m = 0; m < 2; ++m) K.block(m * 10, m * 10, 10, 10) += cov.B[m];
    CHECK((K - K.transpose()).cwiseAbs().maxCoeff() <= 1e-10 * K.cwiseAbs().maxCoeff());
    const double lo = Eigen::SelfAdjointEigenSolver<Mat>(0.5 * (K + K.transpose())).eigenvalues().minCoeff();
    CHECK(lo >= -1e-8 * K.trace() / 10.0);
  }
}

TEST_CASE("kernel assembly is identical under both SIMD backends") {
  std::mt19937_64 rng(5);
  const HyperParams hp = random_hp(rng, 2, 9);
  const Mat X = Mat::Random(23, 1);
  const simd::Backend saved = simd::active_backend();
  simd::set_backend(simd::Backend::Scalar);
  const CovBlocks a = assemble_cov(X, hp);
  simd::set_backend(simd::Backend::Avx2);
  const CovBlocks b = assemble_cov(X, hp);
  simd::set_backend(saved);
  CHECK((a.Kfu - b.Kfu).cwiseAbs().maxCoeff() <= 1e-12 * a.Kfu.cwiseAbs().maxCoeff());
  CHECK((a.Kuu - b.Kuu).cwiseAbs().maxCoeff() <= 1e-12);
  for (Index m = 0; m < 2; ++m)
    CHECK((a.Kff[m] - b.Kff[m]).cwiseAbs().maxCoeff() <= 1e-12 * a.Kff[m].cwiseAbs().maxCoeff());
}

TEST_CASE("invalid hyperparameters are rejected") {
  HyperParams hp;
  hp.latent = latent(-1.0);
  hp.outputs = {output(1.0, 10.0)};
  hp.noise.sigma = Vec::Constant(1, 0.1);
  hp.inducing.W = Mat::Zero(1, 1);
  CHECK_THROWS_AS(hp.validate(), Error);
  hp.latent = latent(1.0);
  hp.noise.sigma = Vec::Constant(1, 0.0);
  CHECK_THROWS_AS(hp.validate(), Error);
}
