#include "wsmgp/metrics.hpp"

#include <cmath>
#include <limits>

namespace wsmgp {

double rmse(const Vec& a, const Vec& b) {
  if (a.size() != b.size() || a.size() == 0) throw Error("rmse needs equal, non-empty vectors");
  return std::sqrt((a - b).squaredNorm() / static_cast<double>(a.size()));
}

Vec rmse_eval(const Prediction& pred, const std::vector<Vec>& curves) {
  if (pred.mean.size() != curves.size()) throw Error("grid mismatch: output count differs");
  Vec out(static_cast<Index>(curves.size()));
  for (std::size_t m = 0; m < curves.size(); ++m) {
    if (pred.mean[m].size() != curves[m].size()) throw Error("grid mismatch: prediction and truth lengths differ");
    out(static_cast<Index>(m)) = rmse(pred.mean[m], curves[m]);
  }
  return out;
}

Vec heldout_rmse(const Prediction& pred, const Vec& y, const std::vector<int>& source) {
  const Index M = static_cast<Index>(pred.mean.size());
  Vec sum = Vec::Zero(M), cnt = Vec::Zero(M);
  for (Index i = 0; i < y.size(); ++i) {
    const int m = source[static_cast<std::size_t>(i)];
    const double r = y(i) - pred.mean[static_cast<std::size_t>(m)](i);
    sum(m) += r * r;
    cnt(m) += 1.0;
  }
  Vec out(M);
  for (Index m = 0; m < M; ++m)
    out(m) = cnt(m) > 0 ? std::sqrt(sum(m) / cnt(m)) : std::numeric_limits<double>::quiet_NaN();
  return out;
}

double label_accuracy(const Mat& piHat, const std::vector<int>& truth) {
  if (piHat.rows() != static_cast<Index>(truth.size())) throw Error("label_accuracy dimension mismatch");
  if (truth.empty()) return 0.0;
  Index hits = 0;
  for (Index n = 0; n < piHat.rows(); ++n) {
    Index best = 0;
    for (Index m = 1; m < piHat.cols(); ++m)
      if (piHat(n, m) > piHat(n, best)) best = m;
    if (best == truth[static_cast<std::size_t>(n)]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

}  // namespace wsmgp
