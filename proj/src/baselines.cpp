#include "wsmgp/baselines.hpp"

#include "wsmgp/linalg.hpp"

#include <chrono>
#include <cmath>

namespace wsmgp {

std::string_view model_name(ModelKind k) {
  switch (k) {
    case ModelKind::WSMGP: return "wsmgp";
    case ModelKind::WSMGP_NoDir: return "wsmgp-nodir";
    case ModelKind::OMGP: return "omgp";
    case ModelKind::OMGP_WS: return "omgp-ws";
    case ModelKind::SCMGP: return "scmgp";
  }
  return "?";
}

ModelKind parse_model(std::string_view s) {
  for (ModelKind k : {ModelKind::WSMGP, ModelKind::WSMGP_NoDir, ModelKind::OMGP, ModelKind::OMGP_WS,
                      ModelKind::SCMGP})
    if (s == model_name(k)) return k;
  throw Error("unknown model '" + std::string(s) + "' (expected wsmgp, wsmgp-nodir, omgp, omgp-ws or scmgp)");
}

HyperParams matched_se(const HyperParams& hp) {
  if (hp.family == KernelFamily::IndependentSE) return hp;
  HyperParams se = hp;
  se.family = KernelFamily::IndependentSE;
  se.inducing.W.resize(0, hp.dim());
  for (Index m = 0; m < hp.num_outputs(); ++m) {
    auto& o = se.outputs[static_cast<std::size_t>(m)];
    const GaussForm f = cross_ff_form(hp.outputs[static_cast<std::size_t>(m)], hp.outputs[static_cast<std::size_t>(m)],
                                      hp.latent);
    o.amplitude = std::sqrt(prior_variance(m, hp));
    o.precision = f.prec;
  }
  return se;
}

Dataset strip_labels(const Dataset& ds) {
  Dataset out = ds;
  std::fill(out.labels.begin(), out.labels.end(), kUnlabeled);
  out.priorPi.setZero();
  return out;
}

FitReport fit_omgp(const Dataset& ds, const ModelConfig& cfg, const OptimizerConfig& opt, const HyperParams& hp0) {
  ModelConfig c = cfg;
  c.useDirichlet = false;
  return fit_cvb(strip_labels(ds), c, matched_se(hp0), opt);
}

FitReport fit_omgp_ws(const Dataset& ds, const ModelConfig& cfg, const OptimizerConfig& opt,
                      const HyperParams& hp0) {
  ModelConfig c = cfg;
  c.useDirichlet = false;
  return fit_cvb(ds, c, matched_se(hp0), opt);
}

FitReport fit_scmgp(const Dataset& ds, const ModelConfig& cfg, const OptimizerConfig& opt, const HyperParams& hp0) {
  const auto t0 = std::chrono::steady_clock::now();
  validate_dataset(ds, cfg);
  hp0.validate();
  if (ds.num_labeled() == 0) throw Error("SCMGP requires at least one labeled observation");
  VariationalState empty;
  const ParamPacker packer(hp0, cfg, ds.size(), Objective::Scmgp);
  const BoundFn f = [&](const Vec& x, Vec* grad) {
    HyperParams h = hp0;
    ModelConfig c = cfg;
    VariationalState s;
    packer.unpack(x, h, c, s);
    if (!grad) return scmgp_loglik(ds, h);
    const GradientBundle g = grad_scmgp(ds, h);
    *grad = packer.gradient(g);
    return g.bound;
  };
  const Vec x0 = packer.pack(hp0, cfg, empty);
  Vec g0;
  require_finite_start(f(x0, &g0), hp0, cfg);
  const LbfgsResult res = maximize_lbfgs(f, x0, opt.maxIter, opt.tolRelBound, opt.lbfgsHistory);

  FitReport rep;
  rep.finalHp = hp0;
  rep.finalCfg = cfg;
  packer.unpack(res.x, rep.finalHp, rep.finalCfg, empty);
  rep.boundTrajectory = res.trajectory;
  rep.initialBound = res.trajectory.front();
  rep.finalBound = res.value;
  rep.converged = res.converged;
  rep.evaluations = res.evaluations + 1;
  rep.bestSeed = opt.seed;

  // Responsibilities from the predictive densities, uniform over outputs.
  const Prediction p = predict_scmgp(ds, rep.finalHp, ds.X);
  const Mat logp = predictive_log_density(p, ds.y);
  const Index M = rep.finalHp.num_outputs();
  rep.finalState.piHat.resize(ds.size(), M);
  for (Index n = 0; n < ds.size(); ++n) {
    if (ds.is_labeled(n)) {
      rep.finalState.piHat.row(n) = label_prior_row(ds, n).transpose();
      continue;
    }
    const Vec l = logp.row(n).transpose();
    rep.finalState.piHat.row(n) = (l.array() - log_sum_exp(l)).exp().matrix().transpose();
  }
  rep.wallClock = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

FitReport fit_model(ModelKind kind, const Dataset& ds, const ModelConfig& cfg, const OptimizerConfig& opt,
                    const HyperParams& hp0, bool svb) {
  switch (kind) {
    case ModelKind::WSMGP:
    case ModelKind::WSMGP_NoDir: {
      ModelConfig c = cfg;
      if (kind == ModelKind::WSMGP_NoDir) c.useDirichlet = false;
      return svb ? fit_svb_em(ds, c, hp0, opt) : fit_cvb(ds, c, hp0, opt);
    }
    case ModelKind::OMGP: return fit_omgp(ds, cfg, opt, hp0);
    case ModelKind::OMGP_WS: return fit_omgp_ws(ds, cfg, opt, hp0);
    case ModelKind::SCMGP: return fit_scmgp(ds, cfg, opt, hp0);
  }
  throw Error("unknown model kind");
}

Prediction predict_model(ModelKind kind, const Dataset& ds, const FitReport& fit, const Mat& xStar) {
  if (kind == ModelKind::SCMGP) return predict_scmgp(ds, fit.finalHp, xStar);
  const Dataset& use = kind == ModelKind::OMGP ? strip_labels(ds) : ds;
  return posterior_predict(use, fit.finalCfg, fit.finalHp, fit.finalState, xStar);
}

}  // namespace wsmgp
