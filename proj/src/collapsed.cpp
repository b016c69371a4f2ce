#include "wsmgp/collapsed.hpp"

#include "wsmgp/linalg.hpp"

#include <sstream>

namespace wsmgp {

Vec stack_targets(const Vec& y, const StackedLayout& layout) {
  Vec out(layout.total_rows());
  Index r = 0;
  for (const auto& block : layout.rows)
    for (Index n : block) out(r++) = y(n);
  return out;
}

Mat CollapsedFactor::solve_A(const Mat& X) const {
  const auto Lu = kuuL.triangularView<Eigen::Lower>();
  return Lu.transpose().solve(whitenedChol.solve(Lu.solve(X)));
}

Mat CollapsedFactor::half_solve_A(const Mat& X) const {
  return whitenedChol.matrixL().solve(kuuL.triangularView<Eigen::Lower>().solve(X));
}

CollapsedFactor factor_collapsed(const CovBlocks& cov, const Vec& yStacked, const Vec& noiseDiag) {
  const auto& layout = cov.layout;
  const Index M = layout.num_outputs();
  const Index R = layout.total_rows();
  const Index Q = cov.num_inducing();
  if (yStacked.size() != R || noiseDiag.size() != R) throw Error("stacked vector length mismatch");

  CollapsedFactor f;
  f.blockChol.resize(static_cast<std::size_t>(M));
  f.binvKfu.resize(R, Q);
  f.binvY.resize(R);
  for (Index m = 0; m < M; ++m) {
    const Index off = layout.offset(m);
    const Index nm = layout.block_size(m);
    if (nm == 0) continue;
    Mat C = cov.B[static_cast<std::size_t>(m)];
    C.diagonal() += noiseDiag.segment(off, nm);
    auto& llt = f.blockChol[static_cast<std::size_t>(m)];
    llt.compute(C);
    if (llt.info() != Eigen::Success) {
      std::ostringstream msg;
      msg << "Cholesky failed for residual block of output " << m + 1;
      throw Error(msg.str());
    }
    f.logDet += log_det(llt);
    f.binvY.segment(off, nm) = llt.solve(yStacked.segment(off, nm));
    if (Q > 0) f.binvKfu.middleRows(off, nm) = llt.solve(cov.Kfu.middleRows(off, nm));
  }

  if (Q > 0) {
    f.kuuL = cov.KuuChol.matrixL();
    const auto Lu = f.kuuL.triangularView<Eigen::Lower>();
    const Mat kw = Lu.solve(cov.Kfu.transpose());  // Q x R
    const Mat bw = Lu.solve(f.binvKfu.transpose());
    Mat A = kw * bw.transpose();
    A = 0.5 * (A + A.transpose());
    A.diagonal().array() += 1.0;
    f.whitenedChol = cholesky_or_throw(A, "I + Lu^{-1} Kuf (B + D)^{-1} Kfu Lu^{-T}");
    f.logDet += log_det(f.whitenedChol);
    const Vec c = cov.Kfu.transpose() * f.binvY;
    f.alpha = f.binvY - f.binvKfu * f.solve_A(c);
  } else {
    f.alpha = f.binvY;
  }
  f.quad = yStacked.dot(f.alpha);
  return f;
}

CollapsedTerm collapsed_gaussian(const CovBlocks& cov, const Vec& yStacked, const Vec& noiseDiag,
                                 bool withGradient) {
  const CollapsedFactor f = factor_collapsed(cov, yStacked, noiseDiag);
  const auto& layout = cov.layout;
  const Index R = layout.total_rows();
  const Index M = layout.num_outputs();
  const Index Q = cov.num_inducing();

  CollapsedTerm t;
  t.value = -0.5 * f.quad - 0.5 * f.logDet - 0.5 * static_cast<double>(R) * kLog2Pi;
  if (!withGradient) return t;

  // G = 1/2 (alpha alpha' - Sigma^{-1}); only its diagonal blocks and G Kfu are formed.
  t.dKff.resize(static_cast<std::size_t>(M));
  t.dNoise.resize(R);
  Mat blockGKfu = Mat::Zero(R, Q);
  for (Index m = 0; m < M; ++m) {
    const Index off = layout.offset(m);
    const Index nm = layout.block_size(m);
    if (nm == 0) {
      t.dKff[static_cast<std::size_t>(m)].resize(0, 0);
      continue;
    }
    const auto& llt = f.blockChol[static_cast<std::size_t>(m)];
    Mat sigmaInvBlock = llt.solve(Mat::Identity(nm, nm));
    if (Q > 0) {
      const auto bk = f.binvKfu.middleRows(off, nm);
      sigmaInvBlock.noalias() -= bk * f.solve_A(bk.transpose());
    }
    const auto a = f.alpha.segment(off, nm);
    Mat G = 0.5 * (a * a.transpose() - sigmaInvBlock);
    t.dNoise.segment(off, nm) = G.diagonal();
    if (Q > 0) blockGKfu.middleRows(off, nm).noalias() = G * cov.Kfu.middleRows(off, nm);
    t.dKff[static_cast<std::size_t>(m)] = std::move(G);
  }

  if (Q > 0) {
    const Mat sigmaInvKfu = f.binvKfu * f.solve_A(cov.Kuu);
    Mat GcKfu = 0.5 * (f.alpha * (f.alpha.transpose() * cov.Kfu) - sigmaInvKfu);
    GcKfu -= blockGKfu;
    const Mat KuuInv = cov.KuuChol.solve(Mat::Identity(Q, Q));
    t.dKfu = 2.0 * GcKfu * KuuInv;
    const Mat inner = cov.Kfu.transpose() * GcKfu;
    t.dKuu = -KuuInv * inner * KuuInv;
  } else {
    t.dKfu.resize(R, 0);
    t.dKuu.resize(0, 0);
  }
  return t;
}

}  // namespace wsmgp
