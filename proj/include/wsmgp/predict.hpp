#pragma once

#include "wsmgp/bounds.hpp"

#include <vector>

namespace wsmgp {

struct Prediction {
  Mat xStar;
  std::vector<Vec> mean;     // per output
  std::vector<Vec> varDiag;  // per output, includes sigma_m^2
};

/// FullData conditions every output on the inducing posterior built from all
/// stacked rows; PerBlock uses only output m's rows for its mean.
enum class PredictMode { FullData, PerBlock };

Prediction posterior_predict(const Dataset& ds, const ModelConfig& cfg, const HyperParams& hp,
                             const VariationalState& state, const Mat& xStar,
                             PredictMode mode = PredictMode::FullData);

/// Sparse conditioning on a given stacked layout with explicit noise diagonal.
Prediction predict_layout(const Mat& X, const StackedLayout& layout, const Vec& yStacked, const Vec& noiseDiag,
                          const HyperParams& hp, const Mat& xStar, PredictMode mode = PredictMode::FullData);

/// Prediction from the labeled rows only, each under its own label with noise sigma_m^2.
Prediction predict_scmgp(const Dataset& ds, const HyperParams& hp, const Mat& xStar);

/// Per-observation log predictive density of y_n under each output, N x M.
Mat predictive_log_density(const Prediction& p, const Vec& y);

}  // namespace wsmgp
