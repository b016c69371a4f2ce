#pragma once

#include "wsmgp/gradients.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace wsmgp {

enum class OptMethod { QuasiNewton, AdaptiveFirstOrder };

struct OptimizerConfig {
  OptMethod method = OptMethod::QuasiNewton;
  Index maxIter = 300;
  double tolRelBound = 1e-7;
  Index emOuterIters = 30;
  Index emInnerStatIters = 25;
  Index emInnerHypIters = 10;
  Index batchSize = 0;        // 0 means full batch
  double stepSize = 1e-2;     // Adam base step, decayed as step / sqrt(t)
  Index restarts = 3;
  std::uint64_t seed = 0;
  Index lbfgsHistory = 10;
  Index warmupRounds = 5;     // fit_cvb: alternating hyper / PiHat rounds before the joint phase
  Index warmupIters = 30;     // iterations per block in each round
  bool informedInit = true;   // first start: unlabeled PiHat from a labeled-only prediction

  void validate(Index N) const;
};

struct FitReport {
  std::vector<double> boundTrajectory;
  HyperParams finalHp;
  VariationalState finalState;
  ModelConfig finalCfg;
  double initialBound = 0.0;
  double finalBound = 0.0;
  bool converged = false;
  double wallClock = 0.0;  // seconds
  Index evaluations = 0;
  std::uint64_t bestSeed = 0;
};

enum class Objective { Cvb, Svb, Scmgp };

/// Which parameter groups are free in a packed vector.
struct ParamGroups {
  bool hyper = true;   // log L, (S_m, log L_m) per output, log sigma
  bool alpha = true;   // log alpha0 (only when the Dirichlet prior is on and alpha0 is optimized)
  bool logits = true;  // N x (M-1) softmax logits, logit 0 pinned per row
  bool qu = true;      // muU and the lower triangle of the q(u) Cholesky factor (Svb only)
};

/// Bijection between model quantities and an unconstrained vector. Inducing
/// inputs are held fixed.
class ParamPacker {
 public:
  ParamPacker(const HyperParams& hp, const ModelConfig& cfg, Index N, Objective obj, ParamGroups groups = {});

  Index size() const { return size_; }
  Vec pack(const HyperParams& hp, const ModelConfig& cfg, const VariationalState& state) const;
  /// Writes every free quantity; PiHat rows are re-floored and alphaHat refreshed.
  void unpack(const Vec& x, HyperParams& hp, ModelConfig& cfg, VariationalState& state) const;
  /// Gradient bundle in the same order as pack().
  Vec gradient(const GradientBundle& g) const;

 private:
  Objective obj_;
  ParamGroups groups_;
  bool convolved_ = true;
  Index d_ = 0, M_ = 0, N_ = 0, Q_ = 0;
  Index size_ = 0;
  Index offHyper_ = 0, offAlpha_ = -1, offLogits_ = -1, offQu_ = -1;
};

/// Row-softmax with logit 0 pinned (each row of z has M entries, z(n, 0) ignored).
Mat softmax_rows(const Mat& logits);
/// Logits with column 0 zero whose softmax reproduces `pi`.
Mat logits_from_pi(const Mat& pi);

/// The value/gradient closure a fit maximizes.
using BoundFn = std::function<double(const Vec& x, Vec* grad)>;

/// Limited-memory BFGS maximization with Armijo backtracking. Only improving
/// steps are accepted; evaluation errors inside the line search shrink the step.
struct LbfgsResult {
  Vec x;
  double value = 0.0;
  std::vector<double> trajectory;
  bool converged = false;
  Index evaluations = 0;
};
LbfgsResult maximize_lbfgs(const BoundFn& f, Vec x0, Index maxIter, double tolRel, Index history);

/// Joint maximization of the collapsed bound over PiHat, kernel parameters, sigma and alpha0.
/// Always quasi-Newton; `method` only affects fit_svb_em.
FitReport fit_cvb(const Dataset& ds, const ModelConfig& cfg, const HyperParams& hp0, const OptimizerConfig& opt);

/// Variational EM on the stochastic bound: q(u) and PiHat with hyperparameters
/// frozen, then hyperparameters with the state frozen, repeated. Full batches
/// under QuasiNewton run each block with L-BFGS (coordinate ascent); otherwise
/// each inner step is one Adam update on a sampled batch.
FitReport fit_svb_em(const Dataset& ds, const ModelConfig& cfg, const HyperParams& hp0, const OptimizerConfig& opt);

/// Throws Error listing every parameter when the starting bound is not finite.
void require_finite_start(double bound, const HyperParams& hp, const ModelConfig& cfg);

std::string describe_params(const HyperParams& hp, const ModelConfig& cfg);

}  // namespace wsmgp
