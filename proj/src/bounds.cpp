#include "wsmgp/bounds.hpp"

#include "wsmgp/linalg.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace wsmgp {

DMatrix compute_D(const VariationalState& state, const NoiseParams& noise) {
  const Index N = state.piHat.rows();
  const Index M = state.piHat.cols();
  DMatrix D;
  D.diag.resize(N * M);
  for (Index m = 0; m < M; ++m) {
    const double s2 = noise.sigma(m) * noise.sigma(m);
    for (Index n = 0; n < N; ++n) D.diag(m * N + n) = s2 / state.piHat(n, m);
  }
  return D;
}

double log_beta(const Vec& a) {
  double s = 0.0;
  for (Index i = 0; i < a.size(); ++i) s += std::lgamma(a(i));
  return s - std::lgamma(a.sum());
}

double kl_acuteness(const Vec& piRow, double alpha0) {
  Vec p = piRow;
  floor_simplex_row(p);
  const Index M = p.size();
  const double ent = (p.array() * p.array().log()).sum();
  const Vec post = (p.array() + alpha0).matrix();
  return ent - (log_beta(post) - log_beta(Vec::Constant(M, alpha0)));
}

VTermRow vterm_row(const VariationalState& state, const Dataset& ds, const ModelConfig& cfg,
                   const NoiseParams& noise, Index n) {
  VTermRow r;
  const Index M = state.piHat.cols();
  const Vec p = state.piHat.row(n).transpose();
  if (ds.is_labeled(n)) {
    const Vec prior = label_prior_row(ds, n);
    r.labeledKL = (p.array() * (p.array() / prior.array()).log()).sum();
  } else if (cfg.useDirichlet) {
    const double ent = (p.array() * p.array().log()).sum();
    const Vec post = (p.array() + cfg.alpha0).matrix();
    r.unlabeledKL = ent - (log_beta(post) - log_beta(Vec::Constant(M, cfg.alpha0)));
  } else {
    r.unlabeledKL = (p.array() * (p.array() * static_cast<double>(M)).log()).sum();
  }
  for (Index m = 0; m < M; ++m) {
    const double l2ps = std::log(2.0 * std::numbers::pi * noise.sigma(m) * noise.sigma(m));
    r.expectationCorrection += 0.5 * ((1.0 - p(m)) * l2ps - std::log(p(m)));
  }
  return r;
}

double vterm(const VariationalState& state, const Dataset& ds, const ModelConfig& cfg,
             const NoiseParams& noise) {
  double v = 0.0;
  for (Index n = 0; n < ds.size(); ++n) v += vterm_row(state, ds, cfg, noise, n).value();
  return v;
}

double elbo_cvb(const Dataset& ds, const ModelConfig& cfg, const CovBlocks& cov, const HyperParams& hp,
                const VariationalState& state) {
  const Vec yt = stack_targets(ds.y, cov.layout);
  const DMatrix D = compute_D(state, hp.noise);
  const CollapsedTerm t = collapsed_gaussian(cov, yt, D.diag, false);
  return t.value + vterm(state, ds, cfg, hp.noise);
}

double elbo_cvb(const Dataset& ds, const ModelConfig& cfg, const HyperParams& hp,
                const VariationalState& state) {
  return elbo_cvb(ds, cfg, assemble_cov(ds.X, hp), hp, state);
}

StackedLayout labeled_layout(const Dataset& ds, Index M) {
  StackedLayout l;
  l.rows.resize(static_cast<std::size_t>(M));
  for (Index n = 0; n < ds.size(); ++n)
    if (ds.is_labeled(n)) l.rows[static_cast<std::size_t>(ds.labels[static_cast<std::size_t>(n)])].push_back(n);
  return l;
}

double scmgp_loglik(const Dataset& ds, const HyperParams& hp) {
  if (ds.num_labeled() == 0) throw Error("SCMGP requires at least one labeled observation");
  const StackedLayout layout = labeled_layout(ds, hp.num_outputs());
  const CovBlocks cov = assemble_layout(ds.X, layout, hp);
  Vec noise(layout.total_rows());
  for (Index m = 0; m < layout.num_outputs(); ++m)
    noise.segment(layout.offset(m), layout.block_size(m)).setConstant(hp.noise.sigma(m) * hp.noise.sigma(m));
  return collapsed_gaussian(cov, stack_targets(ds.y, layout), noise, false).value;
}

double exact_marglik_oracle(const Dataset& ds, const ModelConfig& cfg, const HyperParams& hp) {
  const Index N = ds.size();
  const Index M = cfg.M;
  if (std::pow(static_cast<double>(M), static_cast<double>(N)) > kOracleMaxAssignments) {
    std::ostringstream msg;
    msg << "instance too large for exact enumeration: " << M << "^" << N << " assignments exceeds 2^20";
    throw Error(msg.str());
  }

  // Exact cross-covariance between every (output, input) pair, from the closed forms.
  Mat Kbig(N * M, N * M);
  for (Index m = 0; m < M; ++m)
    for (Index n = 0; n < N; ++n)
      for (Index m2 = 0; m2 < M; ++m2)
        for (Index n2 = 0; n2 < N; ++n2)
          Kbig(m * N + n, m2 * N + n2) =
              eval_output_cov(ds.X.row(n).transpose(), m, ds.X.row(n2).transpose(), m2, hp);

  Mat logw(N, M);
  for (Index n = 0; n < N; ++n) {
    if (ds.is_labeled(n))
      logw.row(n) = label_prior_row(ds, n).array().log().transpose();
    else
      logw.row(n).setConstant(-std::log(static_cast<double>(M)));
  }

  const Index total = static_cast<Index>(std::llround(std::pow(static_cast<double>(M), static_cast<double>(N))));
  Vec terms(total);
  std::vector<Index> z(static_cast<std::size_t>(N), 0);
  Mat K(N, N);
  for (Index a = 0; a < total; ++a) {
    double lw = 0.0;
    for (Index n = 0; n < N; ++n) {
      const Index zn = z[static_cast<std::size_t>(n)];
      lw += logw(n, zn);
      for (Index n2 = 0; n2 < N; ++n2) K(n, n2) = Kbig(zn * N + n, z[static_cast<std::size_t>(n2)] * N + n2);
      K(n, n) += hp.noise.sigma(zn) * hp.noise.sigma(zn);
    }
    Eigen::LLT<Mat> llt(K);
    if (llt.info() != Eigen::Success) llt = cholesky_with_jitter(K, "assignment covariance").llt;
    terms(a) = lw + gaussian_log_density(ds.y, llt);
    for (Index n = 0; n < N; ++n) {  // mixed-radix increment
      if (++z[static_cast<std::size_t>(n)] < M) break;
      z[static_cast<std::size_t>(n)] = 0;
    }
  }
  return log_sum_exp(terms);
}

}  // namespace wsmgp
