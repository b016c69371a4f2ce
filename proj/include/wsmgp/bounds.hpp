#pragma once

#include "wsmgp/collapsed.hpp"
#include "wsmgp/model.hpp"

#include <vector>

namespace wsmgp {

/// Heteroscedastic noise diagonal sigma_m^2 / PiHat_nm, ordered by output block then observation.
struct DMatrix {
  Vec diag;
};

DMatrix compute_D(const VariationalState& state, const NoiseParams& noise);

/// Per-observation Dirichlet/multinomial KL at the analytic alphaHat:
/// sum_m pi_m log pi_m - log B(alpha0 + pi) + log B(alpha0 * 1).
double kl_acuteness(const Vec& piRow, double alpha0);

/// log of the multivariate Beta function, through log-gamma.
double log_beta(const Vec& a);

/// Contributions to the V term from one observation. Summing over rows gives vterm().
struct VTermRow {
  double labeledKL = 0.0;
  double unlabeledKL = 0.0;
  double expectationCorrection = 0.0;  // 1/2 sum_m log[(2 pi sigma_m^2)^(1 - pi) / pi]
  double value() const { return -labeledKL - unlabeledKL + expectationCorrection; }
};

VTermRow vterm_row(const VariationalState& state, const Dataset& ds, const ModelConfig& cfg,
                   const NoiseParams& noise, Index n);

/// -KL(q(Z^l) || p(Z^l | Pi^l)) - KL(q(Z^u) q(Pi^u) || p(Z^u | Pi^u) p(Pi^u)) + expectation correction.
/// Without the Dirichlet prior, unlabeled rows are compared against a uniform multinomial.
double vterm(const VariationalState& state, const Dataset& ds, const ModelConfig& cfg,
             const NoiseParams& noise);

/// KL-corrected collapsed bound: log N(y~ | 0, B + Kfu Kuu^{-1} Kuf + D) + V.
double elbo_cvb(const Dataset& ds, const ModelConfig& cfg, const HyperParams& hp,
                const VariationalState& state);

/// Same bound reusing an already assembled full-layout covariance.
double elbo_cvb(const Dataset& ds, const ModelConfig& cfg, const CovBlocks& cov, const HyperParams& hp,
                const VariationalState& state);

/// Layout of the labeled rows, each under its own label.
StackedLayout labeled_layout(const Dataset& ds, Index M);

/// Sparse convolved MGP log marginal likelihood of the labeled rows only.
double scmgp_loglik(const Dataset& ds, const HyperParams& hp);

/// Exact log p(y) by enumerating all M^N assignments with the exact (non-sparse)
/// covariance. Unlabeled rows weigh 1/M each (Dirichlet-multinomial marginal of a
/// symmetric prior); labeled rows weigh by their floored label prior.
double exact_marglik_oracle(const Dataset& ds, const ModelConfig& cfg, const HyperParams& hp);

/// Largest enumeration the oracle accepts.
inline constexpr double kOracleMaxAssignments = 1048576.0;  // 2^20

}  // namespace wsmgp
