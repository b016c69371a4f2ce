#pragma once

#include "wsmgp/predict.hpp"
#include "wsmgp/trainer.hpp"

#include <string>
#include <string_view>

namespace wsmgp {

enum class ModelKind { WSMGP, WSMGP_NoDir, OMGP, OMGP_WS, SCMGP };

std::string_view model_name(ModelKind k);
ModelKind parse_model(std::string_view s);

/// Independent-SE parameters whose per-output prior covariance has the same
/// variance and lengthscale as the convolved kernel's diagonal block.
HyperParams matched_se(const HyperParams& convolved);

/// Copy of ds with every label and prior row removed.
Dataset strip_labels(const Dataset& ds);

/// Independent SE outputs, labels ignored (uniform prior everywhere), no Dirichlet prior.
FitReport fit_omgp(const Dataset& ds, const ModelConfig& cfg, const OptimizerConfig& opt, const HyperParams& hp0);

/// As fit_omgp but labeled rows keep their hard prior.
FitReport fit_omgp_ws(const Dataset& ds, const ModelConfig& cfg, const OptimizerConfig& opt,
                      const HyperParams& hp0);

/// Sparse convolved MGP on the labeled rows only. finalState.piHat holds
/// predictive responsibilities (labeled rows one-hot).
FitReport fit_scmgp(const Dataset& ds, const ModelConfig& cfg, const OptimizerConfig& opt, const HyperParams& hp0);

/// Any model by kind; WSMGP variants use fit_cvb or fit_svb_em depending on `svb`.
FitReport fit_model(ModelKind kind, const Dataset& ds, const ModelConfig& cfg, const OptimizerConfig& opt,
                    const HyperParams& hp0, bool svb = false);

/// Predictions for a fitted model on xStar.
Prediction predict_model(ModelKind kind, const Dataset& ds, const FitReport& fit, const Mat& xStar);

}  // namespace wsmgp
