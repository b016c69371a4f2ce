#include "wsmgp/predict.hpp"

#include "wsmgp/linalg.hpp"

#include <cmath>

namespace wsmgp {

Prediction predict_layout(const Mat& X, const StackedLayout& layout, const Vec& yStacked, const Vec& noiseDiag,
                          const HyperParams& hp, const Mat& xStar, PredictMode mode) {
  if (!xStar.allFinite()) throw Error("prediction inputs must be finite");
  if (xStar.cols() != hp.dim()) throw Error("prediction input dimension does not match kernel dimension");
  const CovBlocks cov = assemble_layout(X, layout, hp);
  const CollapsedFactor f = factor_collapsed(cov, yStacked, noiseDiag);
  const Index M = hp.num_outputs();
  const Index Q = cov.num_inducing();

  Prediction p;
  p.xStar = xStar;
  Vec cAll;
  if (Q > 0) cAll = f.solve_A(cov.Kfu.transpose() * f.binvY);
  for (Index m = 0; m < M; ++m) {
    const double s2 = hp.noise.sigma(m) * hp.noise.sigma(m);
    const double prior = prior_variance(m, hp);
    const Index off = layout.offset(m), nm = layout.block_size(m);
    Vec mean = Vec::Zero(xStar.rows());
    Vec var = Vec::Constant(xStar.rows(), prior);
    if (Q > 0) {
      const Mat Ksu = kfu_matrix(xStar, m, hp);
      Vec c = cAll;
      if (mode == PredictMode::PerBlock)
        c = f.solve_A(cov.Kfu.middleRows(off, nm).transpose() * f.binvY.segment(off, nm));
      mean = Ksu * c;
      const Mat Vu = cov.KuuChol.matrixL().solve(Ksu.transpose());
      const Mat Va = f.half_solve_A(Ksu.transpose());
      var += (Va.array().square().colwise().sum() - Vu.array().square().colwise().sum()).transpose().matrix();
    } else if (nm > 0) {
      // No inducing variables: exact conditioning within the block.
      const Mat Xm = gather_rows(X, layout.rows[static_cast<std::size_t>(m)]);
      const Mat Ksf = kff_matrix(xStar, m, Xm, m, hp);
      mean = Ksf * f.binvY.segment(off, nm);
      const Mat V = f.blockChol[static_cast<std::size_t>(m)].matrixL().solve(Ksf.transpose());
      var -= V.array().square().colwise().sum().transpose().matrix();
    }
    var = var.cwiseMax(0.0);
    var.array() += s2;
    p.mean.push_back(std::move(mean));
    p.varDiag.push_back(std::move(var));
  }
  return p;
}

Prediction posterior_predict(const Dataset& ds, const ModelConfig& cfg, const HyperParams& hp,
                             const VariationalState& state, const Mat& xStar, PredictMode mode) {
  validate_dataset(ds, cfg);
  const StackedLayout layout = StackedLayout::full(ds.size(), hp.num_outputs());
  return predict_layout(ds.X, layout, stack_targets(ds.y, layout), compute_D(state, hp.noise).diag, hp, xStar,
                        mode);
}

Prediction predict_scmgp(const Dataset& ds, const HyperParams& hp, const Mat& xStar) {
  if (ds.num_labeled() == 0) throw Error("SCMGP requires at least one labeled observation");
  const StackedLayout layout = labeled_layout(ds, hp.num_outputs());
  Vec noise(layout.total_rows());
  for (Index m = 0; m < layout.num_outputs(); ++m)
    noise.segment(layout.offset(m), layout.block_size(m)).setConstant(hp.noise.sigma(m) * hp.noise.sigma(m));
  return predict_layout(ds.X, layout, stack_targets(ds.y, layout), noise, hp, xStar);
}

Mat predictive_log_density(const Prediction& p, const Vec& y) {
  const Index M = static_cast<Index>(p.mean.size());
  Mat out(y.size(), M);
  for (Index m = 0; m < M; ++m)
    for (Index n = 0; n < y.size(); ++n) {
      const double v = p.varDiag[static_cast<std::size_t>(m)](n);
      const double r = y(n) - p.mean[static_cast<std::size_t>(m)](n);
      out(n, m) = -0.5 * (kLog2Pi + std::log(v) + r * r / v);
    }
  return out;
}

}  // namespace wsmgp
