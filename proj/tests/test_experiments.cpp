#include "wsmgp/config.hpp"
#include "wsmgp/csv_io.hpp"
#include "wsmgp/fit_io.hpp"
#include "wsmgp/instances.hpp"
#include "wsmgp/metrics.hpp"

#include <doctest.h>

#include <cmath>

using namespace wsmgp;

namespace {

SyntheticConfig two_source(double gamma, double l, std::uint64_t seed) {
  SyntheticConfig sc;
  sc.hp = default_generating_hp();
  sc.gamma = gamma;
  sc.lFrac = l;
  sc.seed = seed;
  return sc;
}

Index count_line_starts(const std::string& text) {
  Index n = 0;
  for (char c : text) n += c == '\n';
  return n;
}

}  // namespace

TEST_CASE("source 1 subsampling keeps ceil(gamma * count) points") {
  for (auto [gamma, expected] : {std::pair{0.2, 24}, {0.3, 36}, {0.5, 60}, {1.0, 120}}) {
    const SyntheticData d = generate_synthetic(two_source(gamma, 0.2, 1));
    Index src0 = 0, src1 = 0;
    for (int l : d.truth.labels) (l == 0 ? src0 : src1)++;
    CHECK(src0 == expected);
    CHECK(src1 == 120);
    CHECK(d.ds.size() == expected + 120);
  }
}

TEST_CASE("synthetic data is deterministic, sorted and labeled as configured") {
  const SyntheticData a = generate_synthetic(two_source(0.5, 0.3, 7));
  const SyntheticData b = generate_synthetic(two_source(0.5, 0.3, 7));
  const SyntheticData c = generate_synthetic(two_source(0.5, 0.3, 8));
  CHECK(a.ds.y == b.ds.y);
  CHECK(a.ds.labels == b.ds.labels);
  CHECK(a.ds.y != c.ds.y);
  for (Index n = 1; n < a.ds.size(); ++n) CHECK(a.ds.X(n, 0) >= a.ds.X(n - 1, 0));
  for (Index n = 0; n < a.ds.size(); ++n)
    if (a.ds.is_labeled(n)) CHECK(a.ds.labels[static_cast<std::size_t>(n)] == a.truth.labels[static_cast<std::size_t>(n)]);
  CHECK(a.truth.curves.size() == 2);
  CHECK(a.truth.heldOutY.size() == 80);
}

TEST_CASE("bias shifts only the second source") {
  SyntheticConfig sc = two_source(1.0, 0.2, 3);
  const SyntheticData a = generate_synthetic(sc);
  sc.bias = 2.0;
  const SyntheticData b = generate_synthetic(sc);
  CHECK((b.truth.curves[0] - a.truth.curves[0]).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(((b.truth.curves[1] - a.truth.curves[1]).array() - 2.0).abs().maxCoeff() < 1e-12);
}

TEST_CASE("invalid synthetic settings") {
  SyntheticConfig sc = two_source(0.0, 0.2, 1);
  CHECK_THROWS_AS(generate_synthetic(sc), Error);
  sc = two_source(0.5, 1.5, 1);
  CHECK_THROWS_AS(generate_synthetic(sc), Error);
}

TEST_CASE("label flipping") {
  const SyntheticData d = generate_synthetic(two_source(1.0, 0.5, 2));
  Dataset all = d.ds;
  flip_labels(all, 2, 1.0, 11);
  for (Index n = 0; n < all.size(); ++n)
    if (all.is_labeled(n))
      CHECK(all.labels[static_cast<std::size_t>(n)] != d.ds.labels[static_cast<std::size_t>(n)]);
  // With two groups every flip is a swap, so flipping twice restores the labels.
  flip_labels(all, 2, 1.0, 12);
  CHECK(all.labels == d.ds.labels);

  Dataset none = d.ds;
  flip_labels(none, 2, 0.0, 11);
  CHECK(none.labels == d.ds.labels);
}

TEST_CASE("RMSE") {
  const Vec a = (Vec(3) << 1.0, 2.0, 3.0).finished();
  CHECK(rmse(a, a) == 0.0);
  CHECK(rmse(a, (a.array() + 0.5).matrix()) == doctest::Approx(0.5));
  CHECK(rmse(Vec::Zero(3), (Vec(3) << 1.0, -1.0, std::sqrt(7.0)).finished()) == doctest::Approx(std::sqrt(3.0)));
  CHECK_THROWS_AS(rmse(a, Vec::Zero(2)), Error);
}

TEST_CASE("held-out RMSE scores each point under its own source") {
  Prediction p;
  p.mean = {Vec::Zero(3), Vec::Constant(3, 1.0)};
  p.varDiag = {Vec::Ones(3), Vec::Ones(3)};
  const Vec y = (Vec(3) << 0.5, 1.0, 3.0).finished();
  const Vec r = heldout_rmse(p, y, {0, 1, 1});
  CHECK(r(0) == doctest::Approx(0.5));
  CHECK(r(1) == doctest::Approx(std::sqrt(2.0)));
  const Vec only0 = heldout_rmse(p, y, {0, 0, 0});
  CHECK(std::isnan(only0(1)));
}

TEST_CASE("label accuracy with ties to the lowest index") {
  Mat pi(4, 2);
  pi << 0.9, 0.1, 0.2, 0.8, 0.5, 0.5, 0.4, 0.6;
  CHECK(label_accuracy(pi, {0, 1, 0, 1}) == doctest::Approx(1.0));
  CHECK(label_accuracy(pi, {0, 1, 1, 1}) == doctest::Approx(0.75));
  CHECK(label_accuracy(pi, {1, 0, 1, 0}) == doctest::Approx(0.0));
}

TEST_CASE("CSV ingestion") {
  const Dataset ds = parse_csv("x,y,label\n0.1,0.5,1\n0.2,-0.3,\n0.4,1.25,2\n");
  CHECK(ds.size() == 3);
  CHECK(ds.priorPi.cols() == 2);
  CHECK(ds.labels == std::vector<int>{0, kUnlabeled, 1});
  CHECK(ds.y(2) == 1.25);
  CHECK(ds.priorPi(2, 1) == 1.0);

  CHECK_THROWS_WITH_AS(parse_csv("x,y,label\nabc,0.5,1\n"), doctest::Contains("line 2"), Error);
  CHECK_THROWS_AS(parse_csv("x,y,label\n0.1,0.5,0\n"), Error);
  CHECK_THROWS_AS(parse_csv(""), Error);
}

TEST_CASE("CSV round trip keeps values and soft priors") {
  Instance in = random_instance(3, {.N = 12});
  const std::string text = format_csv(in.ds);
  const Dataset back = parse_csv(text);
  CHECK(back.X == in.ds.X);
  CHECK(back.y == in.ds.y);
  CHECK(back.labels == in.ds.labels);
  for (Index n = 0; n < back.size(); ++n)
    if (back.is_labeled(n)) CHECK(back.priorPi.row(n) == in.ds.priorPi.row(n));
  CHECK(format_csv(back) == text);
}

TEST_CASE("configuration files") {
  const ConfigMap kv = parse_config_text("# run\nQ = 12\nalpha0=0.5\nmethod = adaptive-first-order\n"
                                         "gammas = 0.2, 0.5\nmodels = wsmgp, scmgp\nuseDirichlet = false\n");
  RunConfig rc;
  apply_config(kv, rc);
  CHECK(rc.model.Q == 12);
  CHECK(rc.model.alpha0 == 0.5);
  CHECK(rc.opt.method == OptMethod::AdaptiveFirstOrder);
  CHECK(rc.bench.gammas == std::vector<double>{0.2, 0.5});
  CHECK(rc.bench.models == std::vector<ModelKind>{ModelKind::WSMGP, ModelKind::SCMGP});
  CHECK_FALSE(rc.model.useDirichlet);

  RunConfig bad;
  CHECK_THROWS_WITH_AS(apply_config(parse_config_text("nope = 1\n"), bad), doctest::Contains("nope"), Error);
  CHECK_THROWS_AS(apply_config(parse_config_text("Q = 2.5\n"), bad), Error);
  CHECK_THROWS_AS(parse_config_text("Q 12\n"), Error);
}

TEST_CASE("benchmark grid: row order, counts and determinism") {
  BenchmarkConfig bc;
  bc.gammas = {0.5, 1.0};
  bc.lFracs = {0.3};
  bc.models = {ModelKind::OMGP_WS, ModelKind::SCMGP};
  bc.replicates = 2;
  SyntheticConfig sc = two_source(1.0, 0.3, 40);
  sc.perSourceCount = 20;
  sc.gridSize = 20;
  sc.heldOutPerSource = 5;
  ModelConfig cfg;
  cfg.Q = 6;
  OptimizerConfig opt;
  opt.restarts = 1;
  opt.maxIter = 20;
  opt.warmupRounds = 1;
  opt.warmupIters = 5;

  const std::vector<ResultRow> a = run_benchmark(bc, sc, cfg, opt);
  REQUIRE(a.size() == 2 * 1 * 2 * 2);
  CHECK(a[0].gamma == 0.5);
  CHECK(a[0].model == ModelKind::OMGP_WS);
  CHECK(a[1].replicate == 1);
  CHECK(a[2].model == ModelKind::SCMGP);
  CHECK(a[4].gamma == 1.0);
  CHECK(a[0].seed == a[2].seed);
  CHECK(a[0].seed != a[1].seed);
  for (const auto& r : a) CHECK(!r.failed);

  const std::string csv = results_csv(a);
  CHECK(count_line_starts(csv) == 1 + 8);
  CHECK(results_csv(run_benchmark(bc, sc, cfg, opt)) == csv);
  CHECK(summary_json(a).find("scmgp") != std::string::npos);
}

TEST_CASE("saved fit round trip") {
  const Instance in = random_instance(5, {.N = 10});
  SavedFit f;
  f.kind = ModelKind::OMGP_WS;
  f.fit.finalHp = in.hp;
  f.fit.finalCfg = in.cfg;
  f.fit.finalState = in.state;
  f.fit.finalBound = -12.5;
  const SavedFit g = fit_from_json(fit_to_json(f));
  CHECK(g.kind == f.kind);
  CHECK(g.fit.finalHp.inducing.W == in.hp.inducing.W);
  CHECK(g.fit.finalHp.noise.sigma == in.hp.noise.sigma);
  CHECK(g.fit.finalState.piHat == in.state.piHat);
  CHECK(g.fit.finalCfg.alpha0 == in.cfg.alpha0);
  CHECK_THROWS_AS(fit_from_json("{}"), Error);
}
