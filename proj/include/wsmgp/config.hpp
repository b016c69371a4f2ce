#pragma once

#include "wsmgp/benchmark.hpp"

#include <map>
#include <string>

namespace wsmgp {

/// Flat `key = value` lines; `#` starts a comment.
using ConfigMap = std::map<std::string, std::string>;

ConfigMap parse_config_text(const std::string& text);
ConfigMap load_config(const std::string& path);

/// Everything a CLI run can be configured with.
struct RunConfig {
  ModelConfig model;
  OptimizerConfig opt;
  SyntheticConfig synth;
  BenchmarkConfig bench;

  RunConfig();
};

/// Applies keys named after struct fields (M, Q, alpha0, useDirichlet,
/// optimizeAlpha0, method, maxIter, tolRelBound, emOuterIters, emInnerStatIters,
/// emInnerHypIters, batchSize, stepSize, restarts, seed, perSourceCount, gamma,
/// lFrac, bias, noiseLabelFlip, xMin, xMax, gridSize, heldOutPerSource, gammas,
/// lFracs, models, replicates, scenario, bound). Unknown keys are errors.
void apply_config(const ConfigMap& kv, RunConfig& rc);

}  // namespace wsmgp
