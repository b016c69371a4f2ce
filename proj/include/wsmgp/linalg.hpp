#pragma once

#include "wsmgp/types.hpp"

#include <string_view>

namespace wsmgp {

/// Smallest squared Cholesky pivot, relative to mean(diag(K)), accepted without jitter.
inline constexpr double kPlainPivotFloor = 1e-10;

/// Cholesky factor of K, or of K + jitter*I when the plain factorization fails or
/// has a squared pivot below kPlainPivotFloor * mean(diag(K)). Jitter starts at
/// relStart*mean(diag(K)) and is multiplied by 10 on failure until it would exceed
/// relMax*mean(diag(K)).
struct JitteredCholesky {
  Eigen::LLT<Mat> llt;
  double jitter = 0.0;
};

JitteredCholesky cholesky_with_jitter(const Mat& K, std::string_view what, double relStart = 1e-6,
                                      double relMax = 1e-2);

/// Plain Cholesky without jitter; throws Error naming `what` when K is not numerically PD.
Eigen::LLT<Mat> cholesky_or_throw(const Mat& K, std::string_view what);

/// max/min eigenvalue ratio of a symmetric matrix (inf when min <= 0).
double condition_estimate(const Mat& K);

inline double log_det(const Eigen::LLT<Mat>& llt) {
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

/// log N(y | 0, K) from a factor of K.
double gaussian_log_density(const Vec& y, const Eigen::LLT<Mat>& llt);

/// log-sum-exp of a vector with -inf entries allowed.
double log_sum_exp(const Vec& v);

}  // namespace wsmgp
