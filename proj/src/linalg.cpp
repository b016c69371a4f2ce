#include "wsmgp/linalg.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace wsmgp {

double condition_estimate(const Mat& K) {
  if (K.rows() == 0) return 1.0;
  Eigen::SelfAdjointEigenSolver<Mat> es(K, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (lo <= 0.0) return std::numeric_limits<double>::infinity();
  return hi / lo;
}

JitteredCholesky cholesky_with_jitter(const Mat& K, std::string_view what, double relStart,
                                      double relMax) {
  JitteredCholesky out;
  if (K.rows() == 0) {
    out.llt.compute(K);
    return out;
  }
  const double scale = K.diagonal().mean();
  out.llt.compute(K);
  if (out.llt.info() == Eigen::Success) {
    const double minPivot = out.llt.matrixLLT().diagonal().minCoeff();
    if (minPivot > 0.0 && minPivot * minPivot > kPlainPivotFloor * scale) return out;
  }
  double rel = relStart;
  while (rel <= relMax * (1.0 + 1e-12)) {
    Mat Kj = K;
    Kj.diagonal().array() += rel * scale;
    out.llt.compute(Kj);
    if (out.llt.info() == Eigen::Success && out.llt.matrixLLT().diagonal().minCoeff() > 0.0) {
      out.jitter = rel * scale;
      return out;
    }
    rel *= 10.0;
  }
  std::ostringstream msg;
  msg << "ill-conditioned " << what << ": Cholesky failed with jitter up to " << relMax * scale
      << " (condition estimate " << condition_estimate(K) << ")";
  throw Error(msg.str());
}

Eigen::LLT<Mat> cholesky_or_throw(const Mat& K, std::string_view what) {
  Eigen::LLT<Mat> llt(K);
  if (llt.info() != Eigen::Success || !(llt.matrixLLT().diagonal().array() > 0.0).all()) {
    std::ostringstream msg;
    msg << "Cholesky failed for " << what << " (condition estimate " << condition_estimate(K) << ")";
    throw Error(msg.str());
  }
  return llt;
}

double gaussian_log_density(const Vec& y, const Eigen::LLT<Mat>& llt) {
  const Vec z = llt.matrixL().solve(y);
  return -0.5 * z.squaredNorm() - 0.5 * log_det(llt) - 0.5 * static_cast<double>(y.size()) * kLog2Pi;
}

double log_sum_exp(const Vec& v) {
  if (v.size() == 0) return -std::numeric_limits<double>::infinity();
  const double mx = v.maxCoeff();
  if (!std::isfinite(mx)) return mx;
  return mx + std::log((v.array() - mx).exp().sum());
}

}  // namespace wsmgp
