#include "wsmgp/kernels.hpp"

#include "wsmgp/linalg.hpp"
#include "wsmgp/simd.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace wsmgp {

namespace {

double quad_form(const Vec& tau, const Vec& prec) { return (prec.array() * tau.array().square()).sum(); }

std::span<const double> as_span(const Vec& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

// out(:, j) = form evaluated between column-major points A (centers from B).
Mat fill_gauss(const Mat& A, const Mat& B, const GaussForm& form, double amplitude) {
  Mat out(A.rows(), B.rows());
  const Index d = A.cols();
  Vec center(d);
  for (Index j = 0; j < B.rows(); ++j) {
    center = B.row(j).transpose();
    simd::gauss_row(as_span(center), A.data(), static_cast<std::size_t>(A.rows()),
                    static_cast<std::size_t>(A.rows()), as_span(form.prec), amplitude * form.unit,
                    out.col(j).data());
  }
  return out;
}

}  // namespace

void HyperParams::validate() const {
  const Index d = dim();
  if (d < 1) throw Error("latent precision must have at least one dimension");
  if (!(latent.precision.array() > 0.0).all()) throw Error("latent precision entries must be positive");
  if (outputs.empty()) throw Error("at least one output kernel is required");
  for (std::size_t m = 0; m < outputs.size(); ++m) {
    const auto& o = outputs[m];
    if (o.precision.size() != d) throw Error("output precision dimension mismatch");
    if (!(o.precision.array() > 0.0).all()) {
      std::ostringstream msg;
      msg << "output " << m + 1 << " precision entries must be positive";
      throw Error(msg.str());
    }
    if (!std::isfinite(o.amplitude)) throw Error("output amplitude must be finite");
  }
  if (noise.sigma.size() != num_outputs()) throw Error("noise vector length must equal number of outputs");
  if (!(noise.sigma.array() > 0.0).all()) throw Error("noise standard deviations must be positive");
  if (uses_inducing()) {
    if (inducing.W.rows() < 1) throw Error("at least one inducing input is required");
    if (inducing.W.cols() != d) throw Error("inducing input dimension mismatch");
    if (!inducing.W.allFinite()) throw Error("inducing inputs must be finite");
  }
}

double eval_kuu(const Vec& w, const Vec& w2, const LatentKernelParams& p) {
  return std::exp(-0.5 * quad_form(w - w2, p.precision));
}

double eval_smoothing(const Vec& tau, const OutputKernelParams& p) {
  const double d = static_cast<double>(tau.size());
  const double norm = std::sqrt(p.precision.prod()) * std::pow(2.0 * std::numbers::pi, -0.5 * d);
  return p.amplitude * norm * std::exp(-0.5 * quad_form(tau, p.precision));
}

GaussForm latent_form(const LatentKernelParams& lat) { return {lat.precision, 1.0}; }

GaussForm cross_fu_form(const OutputKernelParams& out, const LatentKernelParams& lat) {
  const Vec c = out.precision.cwiseInverse() + lat.precision.cwiseInverse();
  return {c.cwiseInverse(), 1.0 / std::sqrt((lat.precision.array() * c.array()).prod())};
}

GaussForm cross_ff_form(const OutputKernelParams& a, const OutputKernelParams& b,
                        const LatentKernelParams& lat) {
  const Vec c = a.precision.cwiseInverse() + b.precision.cwiseInverse() + lat.precision.cwiseInverse();
  return {c.cwiseInverse(), 1.0 / std::sqrt((lat.precision.array() * c.array()).prod())};
}

GaussForm se_form(const OutputKernelParams& out) { return {out.precision, 1.0}; }

double eval_cross_fu(const Vec& x, const Vec& w, const OutputKernelParams& out,
                     const LatentKernelParams& lat) {
  const GaussForm f = cross_fu_form(out, lat);
  return out.amplitude * f.unit * std::exp(-0.5 * quad_form(x - w, f.prec));
}

double eval_cross_ff(const Vec& x, const Vec& x2, const OutputKernelParams& out_m,
                     const OutputKernelParams& out_m2, const LatentKernelParams& lat) {
  const GaussForm f = cross_ff_form(out_m, out_m2, lat);
  return out_m.amplitude * out_m2.amplitude * f.unit * std::exp(-0.5 * quad_form(x - x2, f.prec));
}

double eval_se(const Vec& x, const Vec& x2, const OutputKernelParams& out) {
  return out.amplitude * out.amplitude * std::exp(-0.5 * quad_form(x - x2, out.precision));
}

double eval_output_cov(const Vec& x, Index m, const Vec& x2, Index m2, const HyperParams& hp) {
  if (hp.family == KernelFamily::IndependentSE) return m == m2 ? eval_se(x, x2, hp.outputs[m]) : 0.0;
  return eval_cross_ff(x, x2, hp.outputs[m], hp.outputs[m2], hp.latent);
}

double prior_variance(Index m, const HyperParams& hp) {
  const auto& o = hp.outputs[m];
  if (hp.family == KernelFamily::IndependentSE) return o.amplitude * o.amplitude;
  return o.amplitude * o.amplitude * cross_ff_form(o, o, hp.latent).unit;
}

StackedLayout StackedLayout::full(Index n, Index m) {
  StackedLayout l;
  l.rows.assign(static_cast<std::size_t>(m), std::vector<Index>(static_cast<std::size_t>(n)));
  for (auto& r : l.rows)
    for (Index i = 0; i < n; ++i) r[static_cast<std::size_t>(i)] = i;
  return l;
}

Index StackedLayout::offset(Index m) const {
  Index o = 0;
  for (Index k = 0; k < m; ++k) o += block_size(k);
  return o;
}

Index StackedLayout::total_rows() const { return offset(num_outputs()); }

Mat gather_rows(const Mat& X, const std::vector<Index>& idx) {
  Mat out(static_cast<Index>(idx.size()), X.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Index>(i)) = X.row(idx[i]);
  return out;
}

Mat kuu_matrix(const Mat& W, const LatentKernelParams& lat) {
  Mat K = fill_gauss(W, W, latent_form(lat), 1.0);
  return 0.5 * (K + K.transpose());
}

Mat kfu_matrix(const Mat& Xm, Index m, const HyperParams& hp) {
  if (!hp.uses_inducing()) return Mat::Zero(Xm.rows(), 0);
  const auto& o = hp.outputs[m];
  return fill_gauss(Xm, hp.inducing.W, cross_fu_form(o, hp.latent), o.amplitude);
}

Mat kff_matrix(const Mat& Xa, Index ma, const Mat& Xb, Index mb, const HyperParams& hp) {
  const auto& a = hp.outputs[ma];
  const auto& b = hp.outputs[mb];
  if (hp.family == KernelFamily::IndependentSE) {
    if (ma != mb) return Mat::Zero(Xa.rows(), Xb.rows());
    return fill_gauss(Xa, Xb, se_form(a), a.amplitude * a.amplitude);
  }
  return fill_gauss(Xa, Xb, cross_ff_form(a, b, hp.latent), a.amplitude * b.amplitude);
}

CovBlocks assemble_layout(const Mat& X, const StackedLayout& layout, const HyperParams& hp) {
  hp.validate();
  if (X.rows() < 1) throw Error("assemble_cov requires at least one input");
  if (X.cols() != hp.dim()) throw Error("input dimension does not match kernel dimension");
  if (layout.num_outputs() != hp.num_outputs()) throw Error("layout/output count mismatch");

  CovBlocks cov;
  cov.layout = layout;
  const Index M = layout.num_outputs();
  const Index R = layout.total_rows();
  const Index Q = hp.num_inducing();

  if (Q > 0) {
    const Mat K = kuu_matrix(hp.inducing.W, hp.latent);
    JitteredCholesky jc = cholesky_with_jitter(K, "inducing kernel");
    cov.jitter = jc.jitter;
    cov.Kuu = K;
    cov.Kuu.diagonal().array() += jc.jitter;
    cov.KuuChol = std::move(jc.llt);
  } else {
    cov.Kuu.resize(0, 0);
    cov.KuuChol.compute(cov.Kuu);
  }

  cov.Kfu.resize(R, Q);
  cov.Kff.resize(static_cast<std::size_t>(M));
  cov.B.resize(static_cast<std::size_t>(M));
  for (Index m = 0; m < M; ++m) {
    const Mat Xm = gather_rows(X, layout.rows[static_cast<std::size_t>(m)]);
    const Index off = layout.offset(m);
    const Index nm = Xm.rows();
    if (Q > 0) cov.Kfu.middleRows(off, nm) = kfu_matrix(Xm, m, hp);
    Mat Kmm = kff_matrix(Xm, m, Xm, m, hp);
    Kmm = 0.5 * (Kmm + Kmm.transpose());
    Mat Bm = Kmm;
    if (Q > 0 && nm > 0) {
      const Mat V = cov.KuuChol.matrixL().solve(cov.Kfu.middleRows(off, nm).transpose());
      Bm.noalias() -= V.transpose() * V;
      Bm = 0.5 * (Bm + Bm.transpose());
    }
    cov.Kff[static_cast<std::size_t>(m)] = std::move(Kmm);
    cov.B[static_cast<std::size_t>(m)] = std::move(Bm);
  }
  return cov;
}

CovBlocks assemble_cov(const Mat& X, const HyperParams& hp) {
  return assemble_layout(X, StackedLayout::full(X.rows(), hp.num_outputs()), hp);
}

}  // namespace wsmgp
