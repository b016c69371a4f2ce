#pragma once

#include "wsmgp/kernels.hpp"

#include <vector>

namespace wsmgp {

/// Factorization of Sigma = B + Kfu Kuu^{-1} Kuf + diag(noise) over a stacked
/// layout, exploiting block-diagonal B + D: one Cholesky per output block and
/// one Q x Q system for A = Kuu + Kuf (B + D)^{-1} Kfu, factored in the whitened
/// form A = Lu (I + Lu^{-1} Kuf (B + D)^{-1} Kfu Lu^{-T}) Lu^T.
struct CollapsedFactor {
  std::vector<Eigen::LLT<Mat>> blockChol;  // B_m + D_m
  Mat binvKfu;                             // (B + D)^{-1} Kfu, R x Q
  Vec binvY;                               // (B + D)^{-1} y
  Mat kuuL;                                // Lu, lower Cholesky factor of Kuu
  Eigen::LLT<Mat> whitenedChol;            // I + Lu^{-1} Kuf (B + D)^{-1} Kfu Lu^{-T}
  Vec alpha;                               // Sigma^{-1} y
  double logDet = 0.0;
  double quad = 0.0;                       // y' Sigma^{-1} y

  /// A^{-1} X.
  Mat solve_A(const Mat& X) const;
  /// L^{-1} X for the lower factor L = Lu Lw of A.
  Mat half_solve_A(const Mat& X) const;
};

CollapsedFactor factor_collapsed(const CovBlocks& cov, const Vec& yStacked, const Vec& noiseDiag);

/// log N(y | 0, Sigma) and, on request, its partial derivatives with respect to
/// each Kff block, the noise diagonal, Kfu and (jittered) Kuu, treating every
/// matrix entry as an independent variable.
struct CollapsedTerm {
  double value = 0.0;
  std::vector<Mat> dKff;
  Vec dNoise;
  Mat dKfu;
  Mat dKuu;
};

CollapsedTerm collapsed_gaussian(const CovBlocks& cov, const Vec& yStacked, const Vec& noiseDiag,
                                 bool withGradient);

/// y tiled once per layout row: entry r holds y at that row's input index.
Vec stack_targets(const Vec& y, const StackedLayout& layout);

}  // namespace wsmgp
