#pragma once

#include "wsmgp/svi.hpp"

#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace wsmgp {

/// Gradient of a bound in unconstrained coordinates: log-precisions, raw
/// amplitudes, log-sigma, log-alpha0, softmax logits and q(u) parameters.
struct GradientBundle {
  double bound = 0.0;
  struct Output {
    double dS = 0.0;
    Vec dLogPrecision;
  };
  std::vector<Output> dThetaF;
  Vec dThetaU;       // d / d log L
  Vec dLogSigma;     // M
  Mat dPi;           // partials w.r.t. PiHat entries (before the softmax chain)
  Mat dPiLogits;     // N x M; column 0 belongs to the pinned logit
  double dLogAlpha0 = 0.0;
  Vec dMuU;
  Mat dSuChol;       // lower triangular

  static GradientBundle zeros(const HyperParams& hp, Index N);
};

/// dL/dz for p = softmax(z) row by row, given dL/dp.
Mat softmax_chain(const Mat& pi, const Mat& dPi);

struct VTermGradient {
  double value = 0.0;
  Mat dPi;
  Mat dPiLogits;
  double dAlpha0 = 0.0;
  double dLogAlpha0 = 0.0;
  Vec dLogSigma;
};

/// Exact gradient of V (or of the rows in `rows`, times `scale`), with alphaHat
/// held at its optimum alpha0 + PiHat throughout.
VTermGradient grad_vterm(const VariationalState& state, const Dataset& ds, const ModelConfig& cfg,
                         const NoiseParams& noise,
                         std::optional<std::span<const Index>> rows = std::nullopt, double scale = 1.0);

GradientBundle grad_cvb(const Dataset& ds, const ModelConfig& cfg, const HyperParams& hp,
                        const VariationalState& state);

GradientBundle grad_svb(const Dataset& ds, const ModelConfig& cfg, const HyperParams& hp,
                        const VariationalState& state,
                        std::optional<std::span<const Index>> batch = std::nullopt);

/// Gradient of scmgp_loglik w.r.t. kernel and noise parameters (PiHat fields left empty).
GradientBundle grad_scmgp(const Dataset& ds, const HyperParams& hp);

/// Partial derivatives of kernel matrices, to be chained onto hyperparameters.
struct KernelMatrixGrads {
  std::vector<Mat> X;           // inputs of each output block
  Mat dKuu;                     // Q x Q
  std::vector<Mat> dKfu;        // per block, n_m x Q
  std::vector<Mat> dKff;        // per block full n_m x n_m (may be empty)
  std::vector<double> dKffDiagSum;  // per block: sum of weights on diagonal-only entries
};

/// Adds dL/d(theta) implied by `g` into bundle.dThetaF / dThetaU.
void chain_kernel_grads(const HyperParams& hp, const KernelMatrixGrads& g, GradientBundle& bundle);

struct FiniteDiffReport {
  Vec analytic;
  Vec numeric;
  Vec relError;
  double maxRelError = 0.0;
  Index worst = -1;
};

/// Central differences with step h * (1 + |x_i|). The relative error of each
/// coordinate is |a - n| / max(|a|, |n|, absFloor).
FiniteDiffReport finite_diff_check(const std::function<double(const Vec&)>& f, const Vec& params,
                                   const Vec& analytic, double h = 1e-5, double absFloor = 1e-3);

}  // namespace wsmgp
