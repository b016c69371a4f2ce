#include "wsmgp/benchmark.hpp"

#include "wsmgp/metrics.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace wsmgp {

HyperParams fitting_hp(const HyperParams& generating, Index Q, double xMin, double xMax) {
  HyperParams hp = generating;
  hp.inducing.W.resize(Q, 1);
  for (Index q = 0; q < Q; ++q)
    hp.inducing.W(q, 0) = Q == 1 ? 0.5 * (xMin + xMax) : xMin + (xMax - xMin) * static_cast<double>(q) / static_cast<double>(Q - 1);
  return hp;
}

ResultRow evaluate_model(ModelKind model, const SyntheticData& data, const SyntheticConfig& sc,
                         const ModelConfig& cfg, const OptimizerConfig& opt, bool svb) {
  ResultRow row;
  row.model = model;
  row.gamma = sc.gamma;
  row.lFrac = sc.lFrac;
  row.seed = sc.seed;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    const HyperParams hp0 = fitting_hp(sc.hp, cfg.Q, sc.xMin, sc.xMax);
    OptimizerConfig o = opt;
    o.seed = sc.seed;
    const FitReport fit = fit_model(model, data.ds, cfg, o, hp0, svb);
    const Prediction grid = predict_model(model, data.ds, fit, data.truth.grid);
    row.rmse = rmse_eval(grid, data.truth.curves);
    if (data.truth.heldOutY.size() > 0) {
      const Prediction ho = predict_model(model, data.ds, fit, data.truth.heldOutX);
      row.heldOutRmse = heldout_rmse(ho, data.truth.heldOutY, data.truth.heldOutSource);
    } else {
      row.heldOutRmse = Vec::Constant(sc.M, std::nan(""));
    }
    row.labelAccuracy = label_accuracy(fit.finalState.piHat, data.truth.labels);
    row.bound = fit.finalBound;
  } catch (const std::exception& e) {
    row.failed = true;
    row.error = e.what();
    row.rmse = Vec::Constant(sc.M, std::nan(""));
    row.heldOutRmse = row.rmse;
    row.labelAccuracy = std::nan("");
    row.bound = std::nan("");
  }
  row.wallClock = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return row;
}

std::vector<ResultRow> run_benchmark(const BenchmarkConfig& bc, const SyntheticConfig& base, const ModelConfig& cfg,
                                     const OptimizerConfig& opt) {
  if (bc.replicates < 1) throw Error("replicates must be positive");
  std::vector<ResultRow> rows;
  for (double g : bc.gammas)
    for (double l : bc.lFracs) {
      std::vector<SyntheticData> draws;
      std::vector<SyntheticConfig> scs;
      for (Index r = 0; r < bc.replicates; ++r) {
        SyntheticConfig sc = base;
        sc.gamma = g;
        sc.lFrac = l;
        sc.seed = base.seed + static_cast<std::uint64_t>(r);
        draws.push_back(generate_synthetic(sc));
        scs.push_back(sc);
      }
      for (ModelKind m : bc.models)
        for (Index r = 0; r < bc.replicates; ++r) {
          ResultRow row = evaluate_model(m, draws[static_cast<std::size_t>(r)], scs[static_cast<std::size_t>(r)], cfg,
                                         opt, bc.svb);
          row.replicate = r;
          rows.push_back(std::move(row));
        }
    }
  return rows;
}

namespace {

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  std::ostringstream s;
  s.precision(10);
  s << v;
  return s.str();
}

}  // namespace

std::string results_csv(const std::vector<ResultRow>& rows) {
  Index M = 0;
  for (const auto& r : rows) M = std::max(M, r.rmse.size());
  std::ostringstream out;
  out << "gamma,l,model,replicate,seed";
  for (Index m = 0; m < M; ++m) out << ",rmse_" << m + 1;
  for (Index m = 0; m < M; ++m) out << ",heldout_rmse_" << m + 1;
  out << ",label_accuracy,bound,failed,error\n";
  for (const auto& r : rows) {
    out << num(r.gamma) << "," << num(r.lFrac) << "," << model_name(r.model) << "," << r.replicate << "," << r.seed;
    for (Index m = 0; m < M; ++m) out << "," << num(m < r.rmse.size() ? r.rmse(m) : std::nan(""));
    for (Index m = 0; m < M; ++m) out << "," << num(m < r.heldOutRmse.size() ? r.heldOutRmse(m) : std::nan(""));
    std::string err = r.error;
    for (char& c : err)
      if (c == ',' || c == '\n') c = ';';
    out << "," << num(r.labelAccuracy) << "," << num(r.bound) << "," << (r.failed ? 1 : 0)
        << "," << err << "\n";
  }
  return out.str();
}

std::string summary_json(const std::vector<ResultRow>& rows) {
  struct Acc {
    std::vector<std::vector<double>> rmse;
    std::vector<double> acc;
    Index failed = 0, total = 0;
  };
  std::map<std::tuple<double, double, std::string>, Acc> cells;
  for (const auto& r : rows) {
    auto& a = cells[{r.gamma, r.lFrac, std::string(model_name(r.model))}];
    ++a.total;
    if (r.failed) {
      ++a.failed;
      continue;
    }
    if (a.rmse.size() < static_cast<std::size_t>(r.rmse.size())) a.rmse.resize(static_cast<std::size_t>(r.rmse.size()));
    for (Index m = 0; m < r.rmse.size(); ++m) a.rmse[static_cast<std::size_t>(m)].push_back(r.rmse(m));
    a.acc.push_back(r.labelAccuracy);
  }
  auto stats = [](const std::vector<double>& v) {
    nlohmann::json j;
    if (v.empty()) return nlohmann::json{{"mean", nullptr}, {"sd", nullptr}};
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    j["mean"] = mean;
    j["sd"] = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
    return j;
  };
  nlohmann::json out = nlohmann::json::array();
  for (const auto& [key, a] : cells) {
    nlohmann::json c;
    c["gamma"] = std::get<0>(key);
    c["l"] = std::get<1>(key);
    c["model"] = std::get<2>(key);
    c["replicates"] = a.total;
    c["failed"] = a.failed;
    nlohmann::json rm = nlohmann::json::array();
    for (const auto& v : a.rmse) rm.push_back(stats(v));
    c["rmse"] = rm;
    c["label_accuracy"] = stats(a.acc);
    out.push_back(c);
  }
  return out.dump(2) + "\n";
}

std::string timing_csv(const std::vector<ResultRow>& rows) {
  std::ostringstream out;
  out << "gamma,l,model,replicate,wall_clock\n";
  for (const auto& r : rows)
    out << num(r.gamma) << "," << num(r.lFrac) << "," << model_name(r.model) << "," << r.replicate << ","
        << num(r.wallClock) << "\n";
  return out.str();
}

void write_results_csv(const std::string& path, const std::vector<ResultRow>& rows) {
  std::ofstream f(path);
  if (!f) throw Error("cannot write " + path);
  f << results_csv(rows);
}

void write_summary_json(const std::string& path, const std::vector<ResultRow>& rows) {
  std::ofstream f(path);
  if (!f) throw Error("cannot write " + path);
  f << summary_json(rows);
}

}  // namespace wsmgp
