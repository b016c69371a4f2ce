#pragma once

#include "wsmgp/baselines.hpp"
#include "wsmgp/synthetic.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace wsmgp {

enum class Scenario { TwoSource, SimilarCurves };

struct BenchmarkConfig {
  std::vector<double> gammas{0.2, 0.3, 0.5};
  std::vector<double> lFracs{0.2, 0.3, 0.5};
  std::vector<ModelKind> models{ModelKind::WSMGP, ModelKind::OMGP, ModelKind::OMGP_WS, ModelKind::SCMGP};
  Index replicates = 10;
  Scenario scenario = Scenario::TwoSource;
  bool svb = false;
};

struct ResultRow {
  double gamma = 0.0;
  double lFrac = 0.0;
  ModelKind model = ModelKind::WSMGP;
  Index replicate = 0;
  std::uint64_t seed = 0;
  Vec rmse;         // per source, against the noiseless curve
  Vec heldOutRmse;  // per source, against noisy held-out targets
  double labelAccuracy = 0.0;
  double bound = 0.0;
  double wallClock = 0.0;
  bool failed = false;
  std::string error;
};

/// Kernel initialization for fitting: generating parameters with Q inducing inputs
/// spread evenly over [xMin, xMax].
HyperParams fitting_hp(const HyperParams& generating, Index Q, double xMin, double xMax);

/// Fits one model on one synthetic draw and scores it.
ResultRow evaluate_model(ModelKind model, const SyntheticData& data, const SyntheticConfig& sc,
                         const ModelConfig& cfg, const OptimizerConfig& opt, bool svb);

/// Rows ordered by (gamma, l, model, replicate). Replicate r uses data seed
/// base.seed + r for every cell and model. Failed fits are flagged, not fatal.
std::vector<ResultRow> run_benchmark(const BenchmarkConfig& bc, const SyntheticConfig& base, const ModelConfig& cfg,
                                     const OptimizerConfig& opt);

void write_results_csv(const std::string& path, const std::vector<ResultRow>& rows);
void write_summary_json(const std::string& path, const std::vector<ResultRow>& rows);
std::string results_csv(const std::vector<ResultRow>& rows);
std::string summary_json(const std::vector<ResultRow>& rows);
/// Wall-clock seconds per row, kept apart so results.csv stays reproducible.
std::string timing_csv(const std::vector<ResultRow>& rows);

}  // namespace wsmgp
