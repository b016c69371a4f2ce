#include "wsmgp/svi.hpp"

#include "wsmgp/linalg.hpp"

#include <cmath>
#include <numeric>

namespace wsmgp {

QfMoments qf_moments_rows(const Mat& KfuM, double kffDiag, const Eigen::LLT<Mat>& KuuChol,
                          const Vec& muU, const Mat& suChol) {
  const Index n = KfuM.rows();
  QfMoments q;
  if (KfuM.cols() == 0) {
    q.mu = Vec::Zero(n);
    q.varDiag = Vec::Constant(n, kffDiag);
    return q;
  }
  const Mat P = KuuChol.solve(KfuM.transpose());  // Kuu^{-1} Kuf, Q x n
  q.mu = P.transpose() * muU;
  const Mat LtP = suChol.transpose() * P;
  q.varDiag = Vec::Constant(n, kffDiag) - (KfuM.transpose().array() * P.array()).colwise().sum().transpose().matrix() +
              LtP.array().square().colwise().sum().transpose().matrix();
  for (Index i = 0; i < n; ++i)
    if (q.varDiag(i) < 0.0 && q.varDiag(i) >= -1e-10) q.varDiag(i) = 0.0;
  return q;
}

QfMoments qf_moments(const CovBlocks& cov, Index m, const Vec& muU, const Mat& Su) {
  const Mat KfuM = cov.Kfu_block(m);
  const Index Q = cov.num_inducing();
  QfMoments q;
  if (Q == 0) {
    q.mu = Vec::Zero(KfuM.rows());
    q.varDiag = cov.Kff[static_cast<std::size_t>(m)].diagonal();
    return q;
  }
  const Mat P = cov.KuuChol.solve(KfuM.transpose());
  q.mu = P.transpose() * muU;
  const Mat SP = (Su - cov.Kuu) * P;
  q.varDiag = cov.Kff[static_cast<std::size_t>(m)].diagonal() +
              (P.array() * SP.array()).colwise().sum().transpose().matrix();
  for (Index i = 0; i < q.varDiag.size(); ++i)
    if (q.varDiag(i) < 0.0 && q.varDiag(i) >= -1e-10) q.varDiag(i) = 0.0;
  return q;
}

double gaussian_kl_u_chol(const Vec& muU, const Mat& suChol, const Eigen::LLT<Mat>& KuuChol) {
  const Index Q = muU.size();
  if (Q == 0) return 0.0;
  const Mat KinvL = KuuChol.matrixL().solve(suChol);
  const double trace = KinvL.squaredNorm();
  const double maha = KuuChol.matrixL().solve(muU).squaredNorm();
  const double logdetS = 2.0 * suChol.diagonal().array().abs().log().sum();
  return 0.5 * (trace + maha - static_cast<double>(Q) + log_det(KuuChol) - logdetS);
}

double gaussian_kl_u(const Vec& muU, const Mat& Su, const Mat& Kuu) {
  const Eigen::LLT<Mat> ks = cholesky_or_throw(Kuu, "Kuu");
  const Eigen::LLT<Mat> ss = cholesky_or_throw(Su, "Su");
  return gaussian_kl_u_chol(muU, Mat(ss.matrixL()), ks);
}

namespace {

struct BatchBlocks {
  Mat Kuu;
  Eigen::LLT<Mat> KuuChol;
  std::vector<Mat> Kfu;  // per output, |rows| x Q
};

BatchBlocks batch_blocks(const Dataset& ds, const HyperParams& hp, std::span<const Index> rows) {
  BatchBlocks b;
  const Index Q = hp.num_inducing();
  if (Q > 0) {
    const Mat K = kuu_matrix(hp.inducing.W, hp.latent);
    JitteredCholesky jc = cholesky_with_jitter(K, "inducing kernel");
    b.Kuu = K;
    b.Kuu.diagonal().array() += jc.jitter;
    b.KuuChol = std::move(jc.llt);
  }
  const Mat Xb = gather_rows(ds.X, std::vector<Index>(rows.begin(), rows.end()));
  for (Index m = 0; m < hp.num_outputs(); ++m) b.Kfu.push_back(kfu_matrix(Xb, m, hp));
  return b;
}

}  // namespace

double svb_data_term(const Dataset& ds, const HyperParams& hp, const VariationalState& state,
                     std::span<const Index> rows) {
  const BatchBlocks b = batch_blocks(ds, hp, rows);
  double total = 0.0;
  for (Index m = 0; m < hp.num_outputs(); ++m) {
    const QfMoments q = qf_moments_rows(b.Kfu[static_cast<std::size_t>(m)], prior_variance(m, hp), b.KuuChol,
                                        state.muU, state.suChol);
    const double s2 = hp.noise.sigma(m) * hp.noise.sigma(m);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const Index n = rows[i];
      const double D = s2 / state.piHat(n, m);
      const double r = ds.y(n) - q.mu(static_cast<Index>(i));
      total += -0.5 * (kLog2Pi + std::log(D)) - 0.5 * r * r / D - 0.5 * q.varDiag(static_cast<Index>(i)) / D;
    }
  }
  return total;
}

double elbo_svb(const Dataset& ds, const ModelConfig& cfg, const HyperParams& hp,
                const VariationalState& state, std::optional<std::span<const Index>> batch) {
  std::vector<Index> all;
  std::span<const Index> rows;
  if (batch) {
    rows = *batch;
  } else {
    all.resize(static_cast<std::size_t>(ds.size()));
    std::iota(all.begin(), all.end(), Index{0});
    rows = all;
  }
  if (rows.empty()) throw Error("mini-batch must contain at least one row");
  const double scale = static_cast<double>(ds.size()) / static_cast<double>(rows.size());

  double perRow = svb_data_term(ds, hp, state, rows);
  for (Index n : rows) perRow += vterm_row(state, ds, cfg, hp.noise, n).value();

  double klU = 0.0;
  if (hp.num_inducing() > 0) {
    JitteredCholesky jc = cholesky_with_jitter(kuu_matrix(hp.inducing.W, hp.latent), "inducing kernel");
    klU = gaussian_kl_u_chol(state.muU, state.suChol, jc.llt);
  }
  return scale * perRow - klU;
}

QuOptimum optimal_qu(const Dataset& ds, const HyperParams& hp, const VariationalState& state) {
  const CovBlocks cov = assemble_cov(ds.X, hp);
  const Index Q = cov.num_inducing();
  QuOptimum o;
  if (Q == 0) return o;
  const DMatrix D = compute_D(state, hp.noise);
  const Vec yt = stack_targets(ds.y, cov.layout);
  const Vec dinv = D.diag.cwiseInverse();
  // Whitened system: Kuu A^{-1} = Lu (I + Lu^{-1} Kuf D^{-1} Kfu Lu^{-T})^{-1} Lu^{-1}.
  const Mat Lu = cov.KuuChol.matrixL();
  const auto L = Lu.triangularView<Eigen::Lower>();
  const Mat kw = L.solve(cov.Kfu.transpose());
  Mat A = kw * dinv.asDiagonal() * kw.transpose();
  A = 0.5 * (A + A.transpose());
  A.diagonal().array() += 1.0;
  const Eigen::LLT<Mat> AChol = cholesky_or_throw(A, "optimal q(u) system");
  o.muU = Lu * AChol.solve(kw * dinv.cwiseProduct(yt));
  Mat S = Lu * AChol.solve(Lu.transpose());
  S = 0.5 * (S + S.transpose());
  o.suChol = cholesky_with_jitter(S, "optimal q(u) covariance", 1e-14, 1e-6).llt.matrixL();
  return o;
}

}  // namespace wsmgp
