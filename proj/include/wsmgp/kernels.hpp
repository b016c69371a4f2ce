#pragma once

#include "wsmgp/types.hpp"

#include <vector>

namespace wsmgp {

/// Diagonal precision L of the latent squared-exponential kernel k_uu.
struct LatentKernelParams {
  Vec precision;
};

/// Amplitude S (any real) and diagonal precision L_m of one output's smoothing kernel.
/// For the independent-SE family the same fields mean signal amplitude and inverse squared lengthscales.
struct OutputKernelParams {
  double amplitude = 1.0;
  Vec precision;
};

struct NoiseParams {
  Vec sigma;
};

struct InducingInputs {
  Mat W;  // Q x d
};

enum class KernelFamily {
  Convolved,      // shared latent u convolved with per-output Gaussian smoothing kernels
  IndependentSE,  // one squared-exponential GP per output, zero cross-covariance
};

struct HyperParams {
  KernelFamily family = KernelFamily::Convolved;
  LatentKernelParams latent;
  std::vector<OutputKernelParams> outputs;
  NoiseParams noise;
  InducingInputs inducing;

  Index dim() const { return latent.precision.size(); }
  Index num_outputs() const { return static_cast<Index>(outputs.size()); }
  bool uses_inducing() const { return family == KernelFamily::Convolved; }
  Index num_inducing() const { return uses_inducing() ? inducing.W.rows() : 0; }

  /// Throws Error when a precision or sigma is non-positive or shapes disagree.
  void validate() const;
};

// ---- closed-form evaluations ---------------------------------------------

/// exp(-1/2 (w - w2)' L (w - w2)).
double eval_kuu(const Vec& w, const Vec& w2, const LatentKernelParams& p);

/// S |L_m|^{1/2} (2 pi)^{-d/2} exp(-1/2 tau' L_m tau).
double eval_smoothing(const Vec& tau, const OutputKernelParams& p);

/// cov(f_m(x), u(w)) = S_m (2 pi)^{d/2} |L|^{-1/2} N(x - w | 0, L_m^{-1} + L^{-1}).
double eval_cross_fu(const Vec& x, const Vec& w, const OutputKernelParams& out,
                     const LatentKernelParams& lat);

/// cov(f_m(x), f_m2(x2)) = S_m S_m2 (2 pi)^{d/2} |L|^{-1/2} N(x - x2 | 0, L_m^{-1} + L_m2^{-1} + L^{-1}).
double eval_cross_ff(const Vec& x, const Vec& x2, const OutputKernelParams& out_m,
                     const OutputKernelParams& out_m2, const LatentKernelParams& lat);

/// S^2 exp(-1/2 tau' L_m tau), the per-output kernel of the independent family.
double eval_se(const Vec& x, const Vec& x2, const OutputKernelParams& out);

/// cov(f_m(x), f_m2(x2)) under whichever family hp selects.
double eval_output_cov(const Vec& x, Index m, const Vec& x2, Index m2, const HyperParams& hp);

/// A kernel value written as amplitude * unit * exp(-1/2 sum_k prec_k tau_k^2);
/// `unit` carries every amplitude-free normalizing factor.
struct GaussForm {
  Vec prec;
  double unit = 1.0;
};

GaussForm latent_form(const LatentKernelParams& lat);
GaussForm cross_fu_form(const OutputKernelParams& out, const LatentKernelParams& lat);
GaussForm cross_ff_form(const OutputKernelParams& a, const OutputKernelParams& b,
                        const LatentKernelParams& lat);
GaussForm se_form(const OutputKernelParams& out);

/// Prior variance k_{f_m f_m}(x, x), constant in x for both families.
double prior_variance(Index m, const HyperParams& hp);

// ---- assembly -------------------------------------------------------------

/// Which input rows each output block contains. Rows are stacked by output,
/// then in listed order. The full layout repeats all N inputs for every output.
struct StackedLayout {
  std::vector<std::vector<Index>> rows;

  static StackedLayout full(Index n, Index m);
  Index num_outputs() const { return static_cast<Index>(rows.size()); }
  Index block_size(Index m) const { return static_cast<Index>(rows[m].size()); }
  Index offset(Index m) const;
  Index total_rows() const;
};

/// Assembled sparse-MGP covariance pieces for one layout.
struct CovBlocks {
  StackedLayout layout;
  Mat Kuu;                    // Q x Q, jitter already on the diagonal
  double jitter = 0.0;
  Eigen::LLT<Mat> KuuChol;
  Mat Kfu;                    // R x Q, stacked by output block
  std::vector<Mat> Kff;       // per-output prior blocks
  std::vector<Mat> B;         // Nystrom residuals K_ff,m - K_fu,m Kuu^{-1} K_uf,m

  Index num_inducing() const { return Kuu.rows(); }
  auto Kfu_block(Index m) const { return Kfu.middleRows(layout.offset(m), layout.block_size(m)); }
};

/// Gathers rows `idx` of X into a contiguous column-major matrix.
Mat gather_rows(const Mat& X, const std::vector<Index>& idx);

Mat kuu_matrix(const Mat& W, const LatentKernelParams& lat);
Mat kfu_matrix(const Mat& Xm, Index m, const HyperParams& hp);
Mat kff_matrix(const Mat& Xa, Index ma, const Mat& Xb, Index mb, const HyperParams& hp);

CovBlocks assemble_layout(const Mat& X, const StackedLayout& layout, const HyperParams& hp);

/// Full stacked layout: every f_m evaluated at all N inputs.
CovBlocks assemble_cov(const Mat& X, const HyperParams& hp);

}  // namespace wsmgp
