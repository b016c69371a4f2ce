#include "wsmgp/benchmark.hpp"
#include "wsmgp/instances.hpp"
#include "wsmgp/trainer.hpp"

#include <doctest.h>

#include <cmath>

using namespace wsmgp;

namespace {

bool non_decreasing(const std::vector<double>& t) {
  for (std::size_t i = 1; i < t.size(); ++i)
    if (t[i] < t[i - 1]) return false;
  return true;
}

SyntheticData single_output_data(std::uint64_t seed) {
  SyntheticConfig sc;
  sc.M = 1;
  sc.hp = default_generating_hp();
  sc.hp.outputs.resize(1);
  sc.hp.noise.sigma = Vec::Constant(1, 0.25);
  sc.gamma = 1.0;
  sc.lFrac = 1.0;
  sc.perSourceCount = 120;
  sc.seed = seed;
  return generate_synthetic(sc);
}

HyperParams single_output_hp0() {
  HyperParams h = fitting_hp(default_generating_hp(), 30, -1.0, 1.0);
  h.outputs.resize(1);
  h.noise.sigma = Vec::Constant(1, 0.25);
  return h;
}

}  // namespace

TEST_CASE("parameter transform round trip") {
  for (Objective obj : {Objective::Cvb, Objective::Svb}) {
    const Instance in = random_instance(3);
    const ParamPacker p(in.hp, in.cfg, in.ds.size(), obj);
    const Vec x = p.pack(in.hp, in.cfg, in.state);
    HyperParams h = in.hp;
    ModelConfig c = in.cfg;
    VariationalState s = in.state;
    p.unpack(x, h, c, s);
    CHECK((p.pack(h, c, s) - x).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((s.piHat - in.state.piHat).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(h.noise.sigma.isApprox(in.hp.noise.sigma, 1e-12));
    CHECK(c.alpha0 == doctest::Approx(in.cfg.alpha0).epsilon(1e-12));
    if (obj == Objective::Svb) CHECK((s.suChol - in.state.suChol).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("softmax and logarithm conventions") {
  const Mat z = Mat::Zero(2, 3);
  const Mat p = softmax_rows(z);
  CHECK((p.array() - 1.0 / 3.0).abs().maxCoeff() < 1e-15);
  Mat pi(1, 3);
  pi << 0.2, 0.5, 0.3;
  const Mat l = logits_from_pi(pi);
  CHECK(l(0, 0) == 0.0);
  CHECK((softmax_rows(l) - pi).cwiseAbs().maxCoeff() < 1e-15);

  Instance in = random_instance(1);
  in.hp.noise.sigma(0) = 0.25;
  const ParamPacker pk(in.hp, in.cfg, in.ds.size(), Objective::Cvb, {true, false, false, false});
  const Vec x = pk.pack(in.hp, in.cfg, in.state);
  // Layout: log L, then (S, log L_m) per output, then log sigma.
  CHECK(x(1 + 2 * 2) == doctest::Approx(-1.3863).epsilon(1e-4));
}

TEST_CASE("L-BFGS maximizes a concave quadratic") {
  const Vec c = (Vec(3) << 1.0, -2.0, 0.5).finished();
  const BoundFn f = [&](const Vec& x, Vec* g) {
    const Vec d = x - c;
    if (g) *g = -2.0 * (Vec(3) << 1.0, 10.0, 100.0).finished().cwiseProduct(d);
    return -(d(0) * d(0) + 10.0 * d(1) * d(1) + 100.0 * d(2) * d(2));
  };
  const LbfgsResult r = maximize_lbfgs(f, Vec::Zero(3), 200, 1e-14, 5);
  CHECK((r.x - c).cwiseAbs().maxCoeff() < 1e-6);
  CHECK(non_decreasing(r.trajectory));
}

TEST_CASE("collapsed fit is deterministic and monotone") {
  const Instance in = random_instance(5, {.N = 30, .M = 2, .Q = 5});
  OptimizerConfig opt;
  opt.restarts = 2;
  opt.maxIter = 60;
  opt.seed = 9;
  const FitReport a = fit_cvb(in.ds, in.cfg, in.hp, opt);
  const FitReport b = fit_cvb(in.ds, in.cfg, in.hp, opt);
  CHECK(a.boundTrajectory == b.boundTrajectory);
  CHECK(a.finalBound == b.finalBound);
  CHECK(non_decreasing(a.boundTrajectory));
  CHECK(a.finalBound >= a.initialBound);
  CHECK(a.finalBound == doctest::Approx(elbo_cvb(in.ds, a.finalCfg, a.finalHp, a.finalState)).epsilon(1e-10));
}

TEST_CASE("noise level is recovered on single-output data") {
  int hits = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const SyntheticData d = single_output_data(seed);
    ModelConfig cfg;
    cfg.M = 1;
    cfg.Q = 30;
    OptimizerConfig opt;
    opt.restarts = 1;
    opt.seed = seed;
    const FitReport f = fit_cvb(d.ds, cfg, single_output_hp0(), opt);
    const double s = f.finalHp.noise.sigma(0);
    if (s > 0.125 && s < 0.375) ++hits;
  }
  CHECK(hits >= 8);
}

TEST_CASE("three-output fit improves on its initialization") {
  SyntheticConfig sc;
  sc.M = 3;
  sc.hp = similar_curves_hp();
  sc.gamma = 0.2;
  sc.lFrac = 0.2;
  ModelConfig cfg;
  cfg.M = 3;
  cfg.alpha0 = 0.3;
  cfg.optimizeAlpha0 = false;
  OptimizerConfig opt;
  opt.restarts = 1;
  int improved = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    sc.seed = 500 + seed;
    const SyntheticData d = generate_synthetic(sc);
    opt.seed = seed;
    const FitReport f = fit_cvb(d.ds, cfg, fitting_hp(sc.hp, cfg.Q, sc.xMin, sc.xMax), opt);
    if (f.finalBound > f.initialBound + 1.0) ++improved;
  }
  CHECK(improved == 10);
}

TEST_CASE("full-batch variational EM is monotone") {
  const Instance in = random_instance(7, {.N = 40, .M = 2, .Q = 6});
  OptimizerConfig opt;
  opt.method = OptMethod::AdaptiveFirstOrder;
  opt.batchSize = 40;
  opt.emOuterIters = 10;
  const FitReport f = fit_svb_em(in.ds, in.cfg, in.hp, opt);
  CHECK(non_decreasing(f.boundTrajectory));
  CHECK(f.finalBound >= f.initialBound);
}

TEST_CASE("variational EM lands near the collapsed optimum") {
  SyntheticConfig sc;
  sc.hp = default_generating_hp();
  sc.perSourceCount = 30;
  sc.gamma = 1.0;
  sc.lFrac = 0.5;
  sc.seed = 17;
  const SyntheticData d = generate_synthetic(sc);
  ModelConfig cfg;
  cfg.Q = 30;
  cfg.alpha0 = 0.3;
  cfg.optimizeAlpha0 = false;
  const HyperParams hp0 = fitting_hp(sc.hp, cfg.Q, sc.xMin, sc.xMax);
  OptimizerConfig opt;
  opt.restarts = 1;
  const FitReport cvb = fit_cvb(d.ds, cfg, hp0, opt);
  OptimizerConfig em = opt;
  em.batchSize = d.ds.size();
  em.emOuterIters = 30;
  const FitReport svb = fit_svb_em(d.ds, cfg, hp0, em);
  CHECK(std::abs(svb.finalBound - cvb.finalBound) <= 2.0);
}

TEST_CASE("optimizer settings are validated") {
  OptimizerConfig opt;
  opt.maxIter = 0;
  CHECK_THROWS_AS(opt.validate(10), Error);
  opt = {};
  opt.batchSize = 11;
  CHECK_THROWS_AS(opt.validate(10), Error);
  opt = {};
  opt.stepSize = 0.0;
  CHECK_THROWS_AS(opt.validate(10), Error);
}

TEST_CASE("non-finite starting bound names the parameters") {
  Instance in = random_instance(2);
  in.hp.noise.sigma(0) = 1e-300;
  OptimizerConfig opt;
  opt.restarts = 1;
  CHECK_THROWS_AS(fit_cvb(in.ds, in.cfg, in.hp, opt), Error);
}
