// Command-line surface: generate, fit, predict, evaluate, benchmark, gradcheck, oracle-check.

#include "wsmgp/benchmark.hpp"
#include "wsmgp/config.hpp"
#include "wsmgp/csv_io.hpp"
#include "wsmgp/fit_io.hpp"
#include "wsmgp/instances.hpp"
#include "wsmgp/metrics.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

using namespace wsmgp;
namespace fs = std::filesystem;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string model = "wsmgp";
  std::string bound = "cvb";
  std::optional<double> alpha0;
  std::string out = ".";
};

void add_common(CLI::App* app, Common& c, bool withModel) {
  app->add_option("--config", c.config, "flat key = value configuration file");
  app->add_option("--seed", c.seed, "random seed");
  app->add_option("--out", c.out, "output directory");
  if (withModel) {
    app->add_option("--model", c.model, "wsmgp | wsmgp-nodir | omgp | omgp-ws | scmgp");
    app->add_option("--bound", c.bound, "cvb | svb")->check(CLI::IsMember({"cvb", "svb"}));
    app->add_option("--alpha0", c.alpha0, "Dirichlet concentration (pins alpha0)");
  }
}

RunConfig resolve(const Common& c) {
  RunConfig rc;
  if (!c.config.empty()) apply_config(load_config(c.config), rc);
  if (c.seed) rc.opt.seed = rc.synth.seed = *c.seed;
  if (c.alpha0) {
    rc.model.alpha0 = *c.alpha0;
    rc.model.optimizeAlpha0 = false;
  }
  if (c.bound == "svb") rc.bench.svb = true;
  return rc;
}

std::string out_path(const Common& c, const std::string& name) {
  fs::create_directories(c.out);
  return (fs::path(c.out) / name).string();
}

Mat grid_over(const Mat& X, Index n) {
  const double lo = X.col(0).minCoeff(), hi = X.col(0).maxCoeff();
  Mat g(n, 1);
  for (Index i = 0; i < n; ++i) g(i, 0) = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  return g;
}

void write_truth(const std::string& path, const GroundTruth& t) {
  std::ofstream f(path);
  f.precision(17);
  f << "x";
  for (std::size_t m = 0; m < t.curves.size(); ++m) f << ",truth_" << m + 1;
  f << "\n";
  for (Index i = 0; i < t.grid.rows(); ++i) {
    f << t.grid(i, 0);
    for (const auto& c : t.curves) f << "," << c(i);
    f << "\n";
  }
}

void write_labels(const std::string& path, const std::vector<int>& labels) {
  std::ofstream f(path);
  f << "row,label\n";
  for (std::size_t n = 0; n < labels.size(); ++n) f << n + 1 << "," << labels[n] + 1 << "\n";
}

// Numeric table with a header row.
struct Table {
  std::vector<std::string> names;
  std::vector<std::vector<double>> cols;
  const std::vector<double>& col(const std::string& n) const {
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == n) return cols[i];
    throw Error("missing column '" + n + "'");
  }
};

Table read_table(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error("cannot open " + path);
  Table t;
  std::string line, cell;
  std::getline(f, line);
  std::istringstream h(line);
  while (std::getline(h, cell, ',')) t.names.push_back(cell);
  t.cols.resize(t.names.size());
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::istringstream r(line);
    for (std::size_t i = 0; i < t.names.size() && std::getline(r, cell, ','); ++i) t.cols[i].push_back(std::stod(cell));
  }
  return t;
}

Vec to_vec(const std::vector<double>& v) { return Eigen::Map<const Vec>(v.data(), static_cast<Index>(v.size())); }

int cmd_generate(const Common& c) {
  const RunConfig rc = resolve(c);
  const SyntheticData d = generate_synthetic(rc.synth);
  write_csv(out_path(c, "data.csv"), d.ds);
  write_truth(out_path(c, "truth.csv"), d.truth);
  write_labels(out_path(c, "labels_truth.csv"), d.truth.labels);
  std::cout << "generated N=" << d.ds.size() << " (labeled " << d.ds.num_labeled() << ") into " << c.out << "\n";
  return 0;
}

int cmd_fit(const Common& c, const std::string& data) {
  RunConfig rc = resolve(c);
  const Dataset ds = ingest_csv(data, {.M = rc.model.M});
  rc.model.M = ds.priorPi.cols();
  const ModelKind kind = parse_model(c.model);
  HyperParams hp0 = rc.synth.hp;
  if (hp0.num_outputs() != rc.model.M) {
    const auto o = hp0.outputs.front();
    hp0.outputs.assign(static_cast<std::size_t>(rc.model.M), o);
    hp0.noise.sigma = Vec::Constant(rc.model.M, hp0.noise.sigma(0));
  }
  hp0 = fitting_hp(hp0, rc.model.Q, ds.X.col(0).minCoeff(), ds.X.col(0).maxCoeff());
  const FitReport fit = fit_model(kind, ds, rc.model, rc.opt, hp0, rc.bench.svb);
  save_fit(out_path(c, "fit.json"), {kind, fit});
  write_pihat_csv(out_path(c, "pihat.csv"), fit.finalState.piHat);
  write_curves_csv(out_path(c, "curves.csv"), predict_model(kind, ds, fit, grid_over(ds.X, rc.synth.gridSize)));
  std::cout << "model " << model_name(kind) << " bound " << fit.finalBound << " after " << fit.evaluations
            << " evaluations (" << fit.wallClock << " s)\n"
            << describe_params(fit.finalHp, fit.finalCfg) << "\n";
  return 0;
}

int cmd_predict(const Common& c, const std::string& fitPath, const std::string& data, const std::string& xstar) {
  const SavedFit f = load_fit(fitPath);
  const Dataset ds = ingest_csv(data, {.M = f.fit.finalCfg.M});
  const Table t = read_table(xstar);
  Mat xs(static_cast<Index>(t.cols.at(0).size()), 1);
  xs.col(0) = to_vec(t.col("x"));
  write_curves_csv(out_path(c, "predictions.csv"), predict_model(f.kind, ds, f.fit, xs));
  std::cout << "wrote " << out_path(c, "predictions.csv") << "\n";
  return 0;
}

int cmd_evaluate(const Common& c, const std::string& curves, const std::string& truth, const std::string& pihat,
                 const std::string& labels) {
  const Table pc = read_table(curves), tc = read_table(truth);
  Prediction p;
  std::vector<Vec> truthCurves;
  for (std::size_t m = 1;; ++m) {
    const std::string tn = "truth_" + std::to_string(m);
    if (std::find(tc.names.begin(), tc.names.end(), tn) == tc.names.end()) break;
    truthCurves.push_back(to_vec(tc.col(tn)));
    p.mean.push_back(to_vec(pc.col("mean_" + std::to_string(m))));
  }
  const Vec r = rmse_eval(p, truthCurves);
  std::ofstream f(out_path(c, "rmse.csv"));
  f << "source,rmse\n";
  for (Index m = 0; m < r.size(); ++m) {
    f << m + 1 << "," << r(m) << "\n";
    std::cout << "source " << m + 1 << " RMSE " << r(m) << "\n";
  }
  if (!pihat.empty() && !labels.empty()) {
    const Table pt = read_table(pihat), lt = read_table(labels);
    Mat pi(static_cast<Index>(pt.cols[0].size()), static_cast<Index>(truthCurves.size()));
    for (Index m = 0; m < pi.cols(); ++m) pi.col(m) = to_vec(pt.col("pi_" + std::to_string(m + 1)));
    std::vector<int> lab;
    for (double v : lt.col("label")) lab.push_back(static_cast<int>(v) - 1);
    std::cout << "label accuracy " << label_accuracy(pi, lab) << "\n";
  }
  return 0;
}

int cmd_benchmark(const Common& c) {
  const RunConfig rc = resolve(c);
  const auto rows = run_benchmark(rc.bench, rc.synth, rc.model, rc.opt);
  write_results_csv(out_path(c, "results.csv"), rows);
  write_summary_json(out_path(c, "summary.json"), rows);
  std::ofstream(out_path(c, "timing.csv")) << timing_csv(rows);
  Index failed = 0;
  for (const auto& r : rows) failed += r.failed ? 1 : 0;
  std::cout << rows.size() << " result rows (" << failed << " failed) in " << c.out << "\n";
  return 0;
}

int cmd_gradcheck(const Common& c, Index instances) {
  const std::uint64_t seed0 = c.seed.value_or(1);
  double worstCvb = 0.0, worstSvb = 0.0;
  for (Index i = 0; i < instances; ++i) {
    Instance in = random_instance(seed0 + static_cast<std::uint64_t>(i));
    for (const bool svb : {false, true}) {
      const ParamPacker pk(in.hp, in.cfg, in.ds.size(), svb ? Objective::Svb : Objective::Cvb);
      const Vec x0 = pk.pack(in.hp, in.cfg, in.state);
      auto f = [&](const Vec& x) {
        HyperParams h = in.hp;
        ModelConfig cc = in.cfg;
        VariationalState s = in.state;
        pk.unpack(x, h, cc, s);
        return svb ? elbo_svb(in.ds, cc, h, s) : elbo_cvb(in.ds, cc, h, s);
      };
      HyperParams h = in.hp;
      ModelConfig cc = in.cfg;
      VariationalState s = in.state;
      pk.unpack(x0, h, cc, s);
      const GradientBundle g = svb ? grad_svb(in.ds, cc, h, s) : grad_cvb(in.ds, cc, h, s);
      const FiniteDiffReport r = finite_diff_check(f, x0, pk.gradient(g));
      (svb ? worstSvb : worstCvb) = std::max(svb ? worstSvb : worstCvb, r.maxRelError);
    }
  }
  std::printf("gradcheck over %ld instances: max rel err cvb %.3e, svb %.3e\n", static_cast<long>(instances), worstCvb,
              worstSvb);
  return worstCvb < 1e-4 && worstSvb < 1e-4 ? 0 : 1;
}

int cmd_oracle_check(const Common& c, Index instances) {
  const std::uint64_t seed0 = c.seed.value_or(1);
  double worst = -1e300;
  for (Index i = 0; i < instances; ++i) {
    Instance in = random_instance(seed0 + static_cast<std::uint64_t>(i), {.N = 6, .M = 2, .Q = 6, .denseW = true});
    const double lb = elbo_cvb(in.ds, in.cfg, in.hp, in.state);
    const double ex = exact_marglik_oracle(in.ds, in.cfg, in.hp);
    worst = std::max(worst, lb - ex);
  }
  std::printf("oracle-check over %ld instances: max (bound - log p(y)) = %.3e\n", static_cast<long>(instances), worst);
  return worst <= 1e-8 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Weakly-supervised multi-output Gaussian-process regression"};
  app.require_subcommand(1);
  Common c;
  std::string data, fitPath, xstar, curves, truth, pihat, labels;
  Index instances = 5;

  auto* gen = app.add_subcommand("generate", "draw a synthetic dataset");
  add_common(gen, c, false);
  auto* fit = app.add_subcommand("fit", "fit a model to a CSV dataset");
  add_common(fit, c, true);
  fit->add_option("--data", data, "dataset CSV")->required();
  auto* pred = app.add_subcommand("predict", "predict from a saved fit");
  add_common(pred, c, false);
  pred->add_option("--fit", fitPath, "fit.json from the fit command")->required();
  pred->add_option("--data", data, "dataset CSV used for fitting")->required();
  pred->add_option("--xstar", xstar, "CSV with an x column")->required();
  auto* ev = app.add_subcommand("evaluate", "RMSE of predicted curves against true curves");
  add_common(ev, c, false);
  ev->add_option("--curves", curves, "curves.csv")->required();
  ev->add_option("--truth", truth, "truth.csv")->required();
  ev->add_option("--pihat", pihat, "pihat.csv");
  ev->add_option("--labels", labels, "labels_truth.csv");
  auto* bench = app.add_subcommand("benchmark", "grid of synthetic experiments");
  add_common(bench, c, true);
  auto* gc = app.add_subcommand("gradcheck", "finite-difference check of both bounds' gradients");
  add_common(gc, c, false);
  gc->add_option("--instances", instances, "number of seeded instances");
  auto* oc = app.add_subcommand("oracle-check", "collapsed bound against exact enumeration");
  add_common(oc, c, false);
  oc->add_option("--instances", instances, "number of seeded instances");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*gen) return cmd_generate(c);
    if (*fit) return cmd_fit(c, data);
    if (*pred) return cmd_predict(c, fitPath, data, xstar);
    if (*ev) return cmd_evaluate(c, curves, truth, pihat, labels);
    if (*bench) return cmd_benchmark(c);
    if (*gc) return cmd_gradcheck(c, instances);
    if (*oc) return cmd_oracle_check(c, instances);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
