#include "wsmgp/gradients.hpp"
#include "wsmgp/instances.hpp"
#include "wsmgp/trainer.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace wsmgp;

namespace {

// Largest relative error of `analytic` against central differences of f at x.
double fd_error(const std::function<double(const Vec&)>& f, const Vec& x, const Vec& analytic) {
  double worst = 0.0;
  for (Index i = 0; i < x.size(); ++i) {
    const double h = 1e-5 * (1.0 + std::abs(x(i)));
    Vec a = x, b = x;
    a(i) += h;
    b(i) -= h;
    const double num = (f(a) - f(b)) / (2.0 * h);
    worst = std::max(worst, std::abs(num - analytic(i)) / std::max({std::abs(num), std::abs(analytic(i)), 1e-3}));
  }
  return worst;
}

struct Packed {
  Instance in;
  ParamPacker packer;
  Vec x;
};

Packed pack(const Instance& in, Objective obj) {
  ParamPacker p(in.hp, in.cfg, in.ds.size(), obj);
  Vec x = p.pack(in.hp, in.cfg, in.state);
  return {in, p, x};
}

double eval(const Packed& p, const Vec& x, Objective obj) {
  HyperParams h = p.in.hp;
  ModelConfig c = p.in.cfg;
  VariationalState s = p.in.state;
  p.packer.unpack(x, h, c, s);
  return obj == Objective::Cvb ? elbo_cvb(p.in.ds, c, h, s) : elbo_svb(p.in.ds, c, h, s);
}

}  // namespace

TEST_CASE("finite_diff_check on a quadratic") {
  const auto f = [](const Vec& x) { return x.squaredNorm(); };
  const Vec x = (Vec(2) << 1.0, 2.0).finished();
  const Vec g = (Vec(2) << 2.0, 4.0).finished();
  CHECK(finite_diff_check(f, x, g).maxRelError < 1e-10);
  Vec bad = g;
  bad(1) *= 1.01;
  const FiniteDiffReport r = finite_diff_check(f, x, bad);
  CHECK(r.maxRelError > 1e-3);
  CHECK(r.worst == 1);
}

TEST_CASE("collapsed bound gradient matches finite differences") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Packed p = pack(random_instance(seed), Objective::Cvb);
    HyperParams h = p.in.hp;
    ModelConfig c = p.in.cfg;
    VariationalState s = p.in.state;
    p.packer.unpack(p.x, h, c, s);
    const Vec g = p.packer.gradient(grad_cvb(p.in.ds, c, h, s));
    CHECK(fd_error([&](const Vec& x) { return eval(p, x, Objective::Cvb); }, p.x, g) < 1e-4);
  }
}

TEST_CASE("stochastic bound gradient matches finite differences") {
  for (std::uint64_t seed = 11; seed <= 15; ++seed) {
    const Packed p = pack(random_instance(seed), Objective::Svb);
    HyperParams h = p.in.hp;
    ModelConfig c = p.in.cfg;
    VariationalState s = p.in.state;
    p.packer.unpack(p.x, h, c, s);
    const Vec g = p.packer.gradient(grad_svb(p.in.ds, c, h, s));
    CHECK(fd_error([&](const Vec& x) { return eval(p, x, Objective::Svb); }, p.x, g) < 1e-4);
  }
}

TEST_CASE("single-output noise gradient against the dense Gaussian likelihood") {
  Mat X(7, 1);
  X << -0.8, -0.5, -0.3, 0.0, 0.2, 0.6, 0.9;
  Vec y(7);
  y << 0.2, 0.5, -0.1, 0.3, 0.8, -0.4, 0.1;
  const Dataset ds = make_dataset(X, y, std::vector<int>(7, 0), 1);
  ModelConfig cfg;
  cfg.M = 1;
  cfg.Q = 3;
  HyperParams hp;
  hp.latent.precision = Vec::Constant(1, 15.0);
  hp.outputs = {{1.2, Vec::Constant(1, 45.0)}};
  hp.noise.sigma = Vec::Constant(1, 0.3);
  hp.inducing.W = (Mat(3, 1) << -0.6, 0.0, 0.6).finished();
  const VariationalState s = init_state(ds, cfg, hp, 0);

  Mat K(7, 7);
  for (Index i = 0; i < 7; ++i)
    for (Index j = 0; j < 7; ++j) K(i, j) = eval_output_cov(X.row(i).transpose(), 0, X.row(j).transpose(), 0, hp);
  const auto loglik = [&](double logSigma) {
    Mat C = K;
    C.diagonal().array() += std::exp(2.0 * logSigma);
    Eigen::LLT<Mat> llt(C);
    return -0.5 * y.dot(llt.solve(y)) - Eigen::Matrix<double, -1, 1>(llt.matrixL().toDenseMatrix().diagonal()).array().log().sum() -
           3.5 * std::log(2.0 * std::numbers::pi);
  };
  const double h = 1e-6, ls = std::log(0.3);
  const double ref = (loglik(ls + h) - loglik(ls - h)) / (2.0 * h);
  CHECK(grad_cvb(ds, cfg, hp, s).dLogSigma(0) == doctest::Approx(ref).epsilon(1e-6));
}

TEST_CASE("zero amplitude output: finite amplitude gradient, no precision gradient") {
  Instance in = random_instance(4);
  in.hp.outputs[1].amplitude = 0.0;
  const GradientBundle g = grad_cvb(in.ds, in.cfg, in.hp, in.state);
  CHECK(std::isfinite(g.dThetaF[1].dS));
  CHECK(g.dThetaF[1].dS != 0.0);
  CHECK(g.dThetaF[1].dLogPrecision(0) == 0.0);
}

TEST_CASE("q(u) mean gradient at the prior") {
  Instance in = random_instance(6, {.N = 8, .M = 2, .Q = 3, .randomQu = false});
  const GradientBundle g = grad_svb(in.ds, in.cfg, in.hp, in.state);
  const CovBlocks cov = assemble_cov(in.ds.X, in.hp);
  Vec expected = Vec::Zero(3);
  for (Index m = 0; m < 2; ++m) {
    const double s2 = in.hp.noise.sigma(m) * in.hp.noise.sigma(m);
    const Vec a = in.ds.y.array() * in.state.piHat.col(m).array() / s2;
    expected += cov.KuuChol.solve(cov.Kfu_block(m).transpose() * a);
  }
  for (Index q = 0; q < 3; ++q) CHECK(g.dMuU(q) == doctest::Approx(expected(q)).epsilon(1e-8));
}

TEST_CASE("V term gradient matches finite differences") {
  for (std::uint64_t seed = 21; seed <= 25; ++seed) {
    Instance in = random_instance(seed);
    ParamPacker p(in.hp, in.cfg, in.ds.size(), Objective::Cvb, {false, true, true, false});
    const Vec x = p.pack(in.hp, in.cfg, in.state);
    const auto f = [&](const Vec& v) {
      HyperParams h = in.hp;
      ModelConfig c = in.cfg;
      VariationalState s = in.state;
      p.unpack(v, h, c, s);
      return vterm(s, in.ds, c, h.noise);
    };
    const VTermGradient vg = grad_vterm(in.state, in.ds, in.cfg, in.hp.noise);
    GradientBundle b = GradientBundle::zeros(in.hp, in.ds.size());
    b.dPiLogits = vg.dPiLogits;
    b.dLogAlpha0 = vg.dLogAlpha0;
    CHECK(fd_error(f, x, p.gradient(b)) < 1e-6);
  }
}

TEST_CASE("labeled row at its prior: constant KL gradient is annihilated by the softmax") {
  Mat pi(2, 3);
  pi << 0.2, 0.3, 0.5, 0.6, 0.3, 0.1;
  const Mat chained = softmax_chain(pi, Mat::Constant(2, 3, -1.0));
  CHECK(chained.cwiseAbs().maxCoeff() < 1e-15);

  Mat X(1, 1);
  X << 0.0;
  Dataset ds = make_dataset(X, Vec::Zero(1), {0}, 2);
  ds.priorPi.row(0) << 0.7, 0.3;
  ModelConfig cfg;
  HyperParams hp;
  hp.latent.precision = Vec::Constant(1, 10.0);
  hp.outputs = {{1.0, Vec::Constant(1, 10.0)}, {1.0, Vec::Constant(1, 10.0)}};
  hp.noise.sigma = Vec::Constant(2, 0.4);
  hp.inducing.W = X;
  VariationalState s = init_state(ds, cfg, hp, 0);
  const VTermGradient g = grad_vterm(s, ds, cfg, hp.noise);
  // Labeled KL contributes -(log(pi/pi_l) + 1) = -1; the correction adds -(log 2 pi s^2 + 1/pi) / 2.
  for (Index m = 0; m < 2; ++m)
    CHECK(g.dPi(0, m) == doctest::Approx(-1.0 - 0.5 * (std::log(2.0 * std::numbers::pi * 0.16) + 1.0 / s.piHat(0, m))));
}

TEST_CASE("alpha0 derivative with uniform rows") {
  Mat X(4, 1);
  X << -0.5, 0.0, 0.2, 0.7;
  const Dataset ds = make_dataset(X, Vec::Zero(4), std::vector<int>(4, kUnlabeled), 2);
  ModelConfig cfg;
  cfg.alpha0 = 1.0;
  HyperParams hp;
  hp.latent.precision = Vec::Constant(1, 10.0);
  hp.outputs = {{1.0, Vec::Constant(1, 10.0)}, {1.0, Vec::Constant(1, 10.0)}};
  hp.noise.sigma = Vec::Constant(2, 0.4);
  hp.inducing.W = X;
  VariationalState s = init_state(ds, cfg, hp, 0);
  s.piHat.setConstant(0.5);
  refresh_state(s, cfg);
  const auto v = [&](double a0) {
    ModelConfig c = cfg;
    c.alpha0 = a0;
    VariationalState t = s;
    refresh_state(t, c);
    return vterm(t, ds, c, hp.noise);
  };
  const double h = 1e-6;
  CHECK(grad_vterm(s, ds, cfg, hp.noise).dAlpha0 == doctest::Approx((v(1.0 + h) - v(1.0 - h)) / (2.0 * h)).epsilon(1e-6));
}

TEST_CASE("finite-difference step sweep is V-shaped on the collapsed bound") {
  const Packed p = pack(random_instance(8), Objective::Cvb);
  HyperParams h = p.in.hp;
  ModelConfig c = p.in.cfg;
  VariationalState s = p.in.state;
  p.packer.unpack(p.x, h, c, s);
  const Vec g = p.packer.gradient(grad_cvb(p.in.ds, c, h, s));
  const auto f = [&](const Vec& x) { return eval(p, x, Objective::Cvb); };
  const double big = finite_diff_check(f, p.x, g, 1e-3).maxRelError;
  const double mid = finite_diff_check(f, p.x, g, 1e-5).maxRelError;
  const double tiny = finite_diff_check(f, p.x, g, 1e-7).maxRelError;
  CHECK(mid < big);
  CHECK(mid < tiny);
}

TEST_CASE("mini-batch gradient averages to the full-batch gradient") {
  Instance in = random_instance(9, {.N = 6, .M = 2, .Q = 3});
  const GradientBundle full = grad_svb(in.ds, in.cfg, in.hp, in.state);
  Vec acc = Vec::Zero(3);
  double accSigma = 0.0;
  int count = 0;
  for (Index i = 0; i < 6; ++i)
    for (Index j = i + 1; j < 6; ++j) {
      const std::vector<Index> batch{i, j};
      const GradientBundle g = grad_svb(in.ds, in.cfg, in.hp, in.state, std::span<const Index>(batch));
      acc += g.dMuU;
      accSigma += g.dLogSigma(0);
      ++count;
    }
  CHECK(((acc / count) - full.dMuU).cwiseAbs().maxCoeff() < 1e-8);
  CHECK(accSigma / count == doctest::Approx(full.dLogSigma(0)).epsilon(1e-10));
}
