#pragma once

#include "wsmgp/bounds.hpp"

#include <optional>
#include <span>

namespace wsmgp {

/// Moments of q(f_m) = integral p(f_m | u) q(u) du at the rows of one output block.
struct QfMoments {
  Vec mu;
  Vec varDiag;
};

/// Diagonal moments from explicit pieces: Kfu (n x Q) of one output, prior variance kff.
QfMoments qf_moments_rows(const Mat& KfuM, double kffDiag, const Eigen::LLT<Mat>& KuuChol,
                          const Vec& muU, const Mat& suChol);

QfMoments qf_moments(const CovBlocks& cov, Index m, const Vec& muU, const Mat& Su);

/// KL(N(muU, Su) || N(0, Kuu)).
double gaussian_kl_u(const Vec& muU, const Mat& Su, const Mat& Kuu);
double gaussian_kl_u_chol(const Vec& muU, const Mat& suChol, const Eigen::LLT<Mat>& KuuChol);

/// Stochastic bound. With a batch, the data sum and per-observation V terms are
/// rescaled by N / |batch|; KL(q(u) || p(u)) is not.
double elbo_svb(const Dataset& ds, const ModelConfig& cfg, const HyperParams& hp,
                const VariationalState& state,
                std::optional<std::span<const Index>> batch = std::nullopt);

/// Unscaled data term sum over `rows` and all outputs of E_q[log N(y_n | f_m(x_n), sigma_m^2 / pi_nm)].
double svb_data_term(const Dataset& ds, const HyperParams& hp, const VariationalState& state,
                     std::span<const Index> rows);

/// Maximizer of the full-batch stochastic bound over q(u) at fixed hyperparameters
/// and PiHat: Su = Kuu A^{-1} Kuu, muU = Kuu A^{-1} Kuf D^{-1} y~ with A = Kuu + Kuf D^{-1} Kfu.
struct QuOptimum {
  Vec muU;
  Mat suChol;
};
QuOptimum optimal_qu(const Dataset& ds, const HyperParams& hp, const VariationalState& state);

}  // namespace wsmgp
