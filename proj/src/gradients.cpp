#include "wsmgp/gradients.hpp"

#include "wsmgp/linalg.hpp"
#include "wsmgp/simd.hpp"

#include <boost/math/special_functions/digamma.hpp>

#include <cmath>
#include <numbers>
#include <numeric>

namespace wsmgp {

namespace {

using boost::math::digamma;

std::span<const double> as_span(const Vec& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

// Weighted zeroth and second moments of the unit Gaussian between centers (rows
// of C) and points (rows of P), with weights Wt(i, j) on point i, center j.
struct Moments {
  double w0 = 0.0;
  Vec w2;
};

Moments weighted_moments(const Mat& P, const Mat& C, const Mat& Wt, const Vec& prec) {
  const Index d = P.cols();
  Moments out;
  out.w2 = Vec::Zero(d);
  Vec center(d), mom(d);
  for (Index j = 0; j < C.rows(); ++j) {
    center = C.row(j).transpose();
    out.w0 += simd::gauss_moments(as_span(center), P.data(), static_cast<std::size_t>(P.rows()),
                                  static_cast<std::size_t>(P.rows()), as_span(prec), Wt.col(j).data(),
                                  {mom.data(), static_cast<std::size_t>(d)});
    out.w2 += mom;
  }
  return out;
}

}  // namespace

GradientBundle GradientBundle::zeros(const HyperParams& hp, Index N) {
  GradientBundle g;
  const Index d = hp.dim();
  const Index M = hp.num_outputs();
  g.dThetaF.resize(static_cast<std::size_t>(M));
  for (auto& o : g.dThetaF) o.dLogPrecision = Vec::Zero(d);
  g.dThetaU = Vec::Zero(d);
  g.dLogSigma = Vec::Zero(M);
  g.dPi = Mat::Zero(N, M);
  g.dPiLogits = Mat::Zero(N, M);
  return g;
}

Mat softmax_chain(const Mat& pi, const Mat& dPi) {
  Mat out(pi.rows(), pi.cols());
  for (Index n = 0; n < pi.rows(); ++n) {
    const double s = pi.row(n).dot(dPi.row(n));
    out.row(n) = pi.row(n).array() * (dPi.row(n).array() - s);
  }
  return out;
}

VTermGradient grad_vterm(const VariationalState& state, const Dataset& ds, const ModelConfig& cfg,
                         const NoiseParams& noise, std::optional<std::span<const Index>> rows, double scale) {
  const Index N = state.piHat.rows();
  const Index M = state.piHat.cols();
  const double Md = static_cast<double>(M);
  std::vector<Index> all;
  std::span<const Index> use;
  if (rows) {
    use = *rows;
  } else {
    all.resize(static_cast<std::size_t>(N));
    std::iota(all.begin(), all.end(), Index{0});
    use = all;
  }

  VTermGradient g;
  g.dPi = Mat::Zero(N, M);
  g.dLogSigma = Vec::Zero(M);
  Vec l2ps(M);
  for (Index m = 0; m < M; ++m) l2ps(m) = std::log(2.0 * std::numbers::pi * noise.sigma(m) * noise.sigma(m));
  const double a0 = cfg.alpha0;

  for (Index n : use) {
    g.value += scale * vterm_row(state, ds, cfg, noise, n).value();
    const Vec p = state.piHat.row(n).transpose();
    Vec d(M);
    if (ds.is_labeled(n)) {
      const Vec prior = label_prior_row(ds, n);
      d = -((p.array() / prior.array()).log() + 1.0);
    } else if (cfg.useDirichlet) {
      const double psiTot = digamma(Md * a0 + p.sum());
      for (Index m = 0; m < M; ++m) d(m) = -(std::log(p(m)) + 1.0) + digamma(a0 + p(m)) - psiTot;
      double da = -Md * psiTot - Md * digamma(a0) + Md * digamma(Md * a0);
      for (Index m = 0; m < M; ++m) da += digamma(a0 + p(m));
      g.dAlpha0 += scale * da;
    } else {
      d = -((p.array() * Md).log() + 1.0);
    }
    for (Index m = 0; m < M; ++m) {
      d(m) += -0.5 * l2ps(m) - 0.5 / p(m);
      g.dLogSigma(m) += scale * (1.0 - p(m));
    }
    g.dPi.row(n) = scale * d.transpose();
  }
  g.dLogAlpha0 = g.dAlpha0 * a0;
  g.dPiLogits = softmax_chain(state.piHat, g.dPi);
  return g;
}

void chain_kernel_grads(const HyperParams& hp, const KernelMatrixGrads& g, GradientBundle& bundle) {
  const Index M = hp.num_outputs();
  const Vec& L = hp.latent.precision;

  if (hp.family == KernelFamily::IndependentSE) {
    for (Index m = 0; m < M; ++m) {
      const auto& o = hp.outputs[static_cast<std::size_t>(m)];
      auto& out = bundle.dThetaF[static_cast<std::size_t>(m)];
      double w0 = 0.0;
      Vec w2 = Vec::Zero(hp.dim());
      if (m < static_cast<Index>(g.dKff.size()) && g.dKff[static_cast<std::size_t>(m)].size() > 0) {
        const Mat& X = g.X[static_cast<std::size_t>(m)];
        const Moments mo = weighted_moments(X, X, g.dKff[static_cast<std::size_t>(m)], o.precision);
        w0 += mo.w0;
        w2 += mo.w2;
      }
      if (m < static_cast<Index>(g.dKffDiagSum.size())) w0 += g.dKffDiagSum[static_cast<std::size_t>(m)];
      const double S = o.amplitude;
      out.dS += 2.0 * S * w0;
      out.dLogPrecision += S * S * (-0.5 * o.precision.cwiseProduct(w2));
    }
    return;
  }

  if (g.dKuu.size() > 0) {
    const Mat& W = hp.inducing.W;
    const Moments mo = weighted_moments(W, W, g.dKuu, L);
    bundle.dThetaU += -0.5 * L.cwiseProduct(mo.w2);
  }

  for (Index m = 0; m < M; ++m) {
    const auto& o = hp.outputs[static_cast<std::size_t>(m)];
    auto& out = bundle.dThetaF[static_cast<std::size_t>(m)];
    const double S = o.amplitude;
    const Vec& Lm = o.precision;
    const Mat& X = g.X[static_cast<std::size_t>(m)];

    if (m < static_cast<Index>(g.dKfu.size()) && g.dKfu[static_cast<std::size_t>(m)].size() > 0) {
      const GaussForm f = cross_fu_form(o, hp.latent);
      const Vec c = f.prec.cwiseInverse();
      const Moments mo = weighted_moments(X, hp.inducing.W, g.dKfu[static_cast<std::size_t>(m)], f.prec);
      const Vec core = (Vec::Constant(c.size(), mo.w0) - mo.w2.cwiseQuotient(c)).cwiseQuotient(2.0 * c);
      out.dS += f.unit * mo.w0;
      out.dLogPrecision += S * f.unit * core.cwiseQuotient(Lm);
      bundle.dThetaU += S * f.unit * (core.cwiseQuotient(L) - Vec::Constant(c.size(), 0.5 * mo.w0));
    }

    const GaussForm f = cross_ff_form(o, o, hp.latent);
    const Vec c = f.prec.cwiseInverse();
    double w0 = 0.0;
    Vec w2 = Vec::Zero(hp.dim());
    if (m < static_cast<Index>(g.dKff.size()) && g.dKff[static_cast<std::size_t>(m)].size() > 0) {
      const Moments mo = weighted_moments(X, X, g.dKff[static_cast<std::size_t>(m)], f.prec);
      w0 += mo.w0;
      w2 += mo.w2;
    }
    if (m < static_cast<Index>(g.dKffDiagSum.size())) w0 += g.dKffDiagSum[static_cast<std::size_t>(m)];
    const Vec core = (Vec::Constant(c.size(), w0) - w2.cwiseQuotient(c)).cwiseQuotient(2.0 * c);
    out.dS += 2.0 * S * f.unit * w0;
    out.dLogPrecision += S * S * f.unit * 2.0 * core.cwiseQuotient(Lm);
    bundle.dThetaU += S * S * f.unit * (core.cwiseQuotient(L) - Vec::Constant(c.size(), 0.5 * w0));
  }
}

GradientBundle grad_cvb(const Dataset& ds, const ModelConfig& cfg, const HyperParams& hp,
                        const VariationalState& state) {
  const Index N = ds.size();
  const Index M = hp.num_outputs();
  const CovBlocks cov = assemble_cov(ds.X, hp);
  const Vec yt = stack_targets(ds.y, cov.layout);
  const DMatrix D = compute_D(state, hp.noise);
  const CollapsedTerm t = collapsed_gaussian(cov, yt, D.diag, true);
  const VTermGradient v = grad_vterm(state, ds, cfg, hp.noise);

  GradientBundle g = GradientBundle::zeros(hp, N);
  g.bound = t.value + v.value;
  g.dPi = v.dPi;
  g.dLogSigma = v.dLogSigma;
  g.dLogAlpha0 = cfg.optimizeAlpha0 ? v.dLogAlpha0 : 0.0;
  for (Index m = 0; m < M; ++m)
    for (Index n = 0; n < N; ++n) {
      const double Dv = D.diag(m * N + n);
      const double gn = t.dNoise(m * N + n);
      g.dLogSigma(m) += gn * 2.0 * Dv;
      g.dPi(n, m) += -gn * Dv / state.piHat(n, m);
    }
  g.dPiLogits = softmax_chain(state.piHat, g.dPi);

  KernelMatrixGrads kg;
  kg.X.assign(static_cast<std::size_t>(M), ds.X);
  kg.dKuu = t.dKuu;
  for (Index m = 0; m < M; ++m) kg.dKfu.push_back(t.dKfu.middleRows(m * N, N));
  kg.dKff = t.dKff;
  chain_kernel_grads(hp, kg, g);
  return g;
}

GradientBundle grad_scmgp(const Dataset& ds, const HyperParams& hp) {
  if (ds.num_labeled() == 0) throw Error("SCMGP requires at least one labeled observation");
  const Index M = hp.num_outputs();
  const StackedLayout layout = labeled_layout(ds, M);
  const CovBlocks cov = assemble_layout(ds.X, layout, hp);
  Vec noise(layout.total_rows());
  for (Index m = 0; m < M; ++m)
    noise.segment(layout.offset(m), layout.block_size(m)).setConstant(hp.noise.sigma(m) * hp.noise.sigma(m));
  const CollapsedTerm t = collapsed_gaussian(cov, stack_targets(ds.y, layout), noise, true);

  GradientBundle g = GradientBundle::zeros(hp, 0);
  g.bound = t.value;
  KernelMatrixGrads kg;
  for (Index m = 0; m < M; ++m) {
    const Index off = layout.offset(m), nm = layout.block_size(m);
    g.dLogSigma(m) = 2.0 * hp.noise.sigma(m) * hp.noise.sigma(m) * t.dNoise.segment(off, nm).sum();
    kg.X.push_back(gather_rows(ds.X, layout.rows[static_cast<std::size_t>(m)]));
    kg.dKfu.push_back(t.dKfu.middleRows(off, nm));
  }
  kg.dKuu = t.dKuu;
  kg.dKff = t.dKff;
  chain_kernel_grads(hp, kg, g);
  return g;
}

GradientBundle grad_svb(const Dataset& ds, const ModelConfig& cfg, const HyperParams& hp,
                        const VariationalState& state, std::optional<std::span<const Index>> batch) {
  const Index N = ds.size();
  const Index M = hp.num_outputs();
  const Index Q = hp.num_inducing();
  std::vector<Index> rows;
  if (batch)
    rows.assign(batch->begin(), batch->end());
  else {
    rows.resize(static_cast<std::size_t>(N));
    std::iota(rows.begin(), rows.end(), Index{0});
  }
  if (rows.empty()) throw Error("mini-batch must contain at least one row");
  const Index b = static_cast<Index>(rows.size());
  const double scale = static_cast<double>(N) / static_cast<double>(b);

  GradientBundle g = GradientBundle::zeros(hp, N);
  const VTermGradient v = grad_vterm(state, ds, cfg, hp.noise, std::span<const Index>(rows), scale);
  g.dPi = v.dPi;
  g.dLogSigma = v.dLogSigma;
  g.dLogAlpha0 = cfg.optimizeAlpha0 ? v.dLogAlpha0 : 0.0;
  double bound = v.value;

  const Mat Xb = gather_rows(ds.X, rows);
  Mat Kuu;
  Eigen::LLT<Mat> KuuChol;
  Mat Ainv, Su, Mmid, dAinv;
  Vec beta;
  if (Q > 0) {
    const Mat K = kuu_matrix(hp.inducing.W, hp.latent);
    JitteredCholesky jc = cholesky_with_jitter(K, "inducing kernel");
    Kuu = K;
    Kuu.diagonal().array() += jc.jitter;
    KuuChol = std::move(jc.llt);
    Ainv = KuuChol.solve(Mat::Identity(Q, Q));
    Ainv = 0.5 * (Ainv + Ainv.transpose());
    Su = state.su();
    Mmid = Ainv * Su * Ainv - Ainv;
    beta = Ainv * state.muU;
    dAinv = Mat::Zero(Q, Q);
    g.dMuU = Vec::Zero(Q);
  }
  Mat dS = Mat::Zero(Q, Q);

  KernelMatrixGrads kg;
  kg.X.assign(static_cast<std::size_t>(M), Xb);
  kg.dKffDiagSum.assign(static_cast<std::size_t>(M), 0.0);
  for (Index m = 0; m < M; ++m) {
    const Mat Kfu = kfu_matrix(Xb, m, hp);
    const QfMoments q = qf_moments_rows(Kfu, prior_variance(m, hp), KuuChol, state.muU, state.suChol);
    const double s2 = hp.noise.sigma(m) * hp.noise.sigma(m);
    Vec a(b), vv(b);
    for (Index i = 0; i < b; ++i) {
      const Index n = rows[static_cast<std::size_t>(i)];
      const double Dv = s2 / state.piHat(n, m);
      const double r = ds.y(n) - q.mu(i);
      const double var = q.varDiag(i);
      bound += scale * (-0.5 * (kLog2Pi + std::log(Dv)) - 0.5 * (r * r + var) / Dv);
      a(i) = r / Dv;
      vv(i) = -0.5 / Dv;
      const double dD = scale * (-0.5 / Dv + 0.5 * (r * r + var) / (Dv * Dv));
      g.dLogSigma(m) += dD * 2.0 * Dv;
      g.dPi(n, m) += -dD * Dv / state.piHat(n, m);
      kg.dKffDiagSum[static_cast<std::size_t>(m)] += scale * vv(i);
    }
    if (Q == 0) continue;
    const Mat P = KuuChol.solve(Kfu.transpose());  // Q x b
    g.dMuU += scale * P * a;
    dS += scale * P * vv.asDiagonal() * P.transpose();
    Mat dKfu = a * beta.transpose();
    dKfu += 2.0 * vv.asDiagonal() * Kfu * Mmid;
    kg.dKfu.push_back(scale * dKfu);
    const Mat Phi = Kfu.transpose() * vv.asDiagonal() * Kfu;
    dAinv += scale * (Kfu.transpose() * a * state.muU.transpose() + Phi * Ainv * Su + Su * Ainv * Phi - Phi);
  }

  if (Q > 0) {
    const double kl = gaussian_kl_u_chol(state.muU, state.suChol, KuuChol);
    bound -= kl;
    Mat dKuu = -Ainv * dAinv * Ainv;
    dKuu -= 0.5 * (-Ainv * Su * Ainv - beta * beta.transpose() + Ainv);
    kg.dKuu = dKuu;
    g.dMuU -= beta;
    // d/dL of tr(Kuu^{-1} S) - log|S| with S = L L'.
    const Mat Lt = state.suChol.triangularView<Eigen::Lower>();
    const Mat LinvT = Lt.triangularView<Eigen::Lower>().solve(Mat::Identity(Q, Q)).transpose();
    Mat dL = 2.0 * dS * Lt - (Ainv * Lt - LinvT);
    g.dSuChol = dL.triangularView<Eigen::Lower>();
  }
  g.bound = bound;
  g.dPiLogits = softmax_chain(state.piHat, g.dPi);
  chain_kernel_grads(hp, kg, g);
  return g;
}

FiniteDiffReport finite_diff_check(const std::function<double(const Vec&)>& f, const Vec& params,
                                   const Vec& analytic, double h, double absFloor) {
  const Index P = params.size();
  if (analytic.size() != P) throw Error("analytic gradient length does not match parameter count");
  FiniteDiffReport r;
  r.analytic = analytic;
  r.numeric.resize(P);
  r.relError.resize(P);
  Vec x = params;
  for (Index i = 0; i < P; ++i) {
    const double step = h * (1.0 + std::abs(params(i)));
    x(i) = params(i) + step;
    const double fp = f(x);
    x(i) = params(i) - step;
    const double fm = f(x);
    x(i) = params(i);
    r.numeric(i) = (fp - fm) / (2.0 * step);
    const double denom = std::max({std::abs(analytic(i)), std::abs(r.numeric(i)), absFloor});
    r.relError(i) = std::abs(analytic(i) - r.numeric(i)) / denom;
    if (r.worst < 0 || r.relError(i) > r.maxRelError) {
      r.maxRelError = r.relError(i);
      r.worst = i;
    }
  }
  return r;
}

}  // namespace wsmgp
