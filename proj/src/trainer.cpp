#include "wsmgp/trainer.hpp"

#include "wsmgp/linalg.hpp"
#include "wsmgp/predict.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

namespace wsmgp {

void OptimizerConfig::validate(Index N) const {
  if (maxIter < 1 || emOuterIters < 1 || emInnerStatIters < 1 || emInnerHypIters < 1 || restarts < 1 ||
      lbfgsHistory < 1)
    throw Error("optimizer iteration counts must be positive");
  if (warmupIters < 0 || warmupRounds < 0) throw Error("warm-up counts must be non-negative");
  if (batchSize < 0 || batchSize > N) throw Error("batchSize must lie in [1, N] (0 selects the full batch)");
  if (!(stepSize > 0.0)) throw Error("stepSize must be positive");
  if (!(tolRelBound >= 0.0)) throw Error("tolRelBound must be non-negative");
}

// ---- transforms -------------------------------------------------------------

Mat softmax_rows(const Mat& logits) {
  Mat p(logits.rows(), logits.cols());
  for (Index n = 0; n < logits.rows(); ++n) {
    Vec z = logits.row(n).transpose();
    z(0) = 0.0;
    const double mx = z.maxCoeff();
    Vec e = (z.array() - mx).exp().matrix();
    p.row(n) = (e / e.sum()).transpose();
  }
  return p;
}

Mat logits_from_pi(const Mat& pi) {
  Mat z(pi.rows(), pi.cols());
  for (Index n = 0; n < pi.rows(); ++n) z.row(n) = (pi.row(n).array() / pi(n, 0)).log();
  return z;
}

ParamPacker::ParamPacker(const HyperParams& hp, const ModelConfig& cfg, Index N, Objective obj, ParamGroups groups)
    : obj_(obj), groups_(groups) {
  convolved_ = hp.family == KernelFamily::Convolved;
  d_ = hp.dim();
  M_ = hp.num_outputs();
  N_ = N;
  Q_ = hp.num_inducing();
  Index off = 0;
  if (groups_.hyper) {
    offHyper_ = off;
    off += (convolved_ ? d_ : 0) + M_ * (1 + d_) + M_;
  } else {
    offHyper_ = -1;
  }
  if (groups_.alpha && obj_ != Objective::Scmgp && cfg.useDirichlet && cfg.optimizeAlpha0) offAlpha_ = off++;
  if (groups_.logits && obj_ != Objective::Scmgp && M_ > 1) {
    offLogits_ = off;
    off += N_ * (M_ - 1);
  }
  if (groups_.qu && obj_ == Objective::Svb && Q_ > 0) {
    offQu_ = off;
    off += Q_ + Q_ * (Q_ + 1) / 2;
  }
  size_ = off;
}

Vec ParamPacker::pack(const HyperParams& hp, const ModelConfig& cfg, const VariationalState& state) const {
  Vec x(size_);
  if (offHyper_ >= 0) {
    Index i = offHyper_;
    if (convolved_) {
      x.segment(i, d_) = hp.latent.precision.array().log().matrix();
      i += d_;
    }
    for (Index m = 0; m < M_; ++m) {
      const auto& o = hp.outputs[static_cast<std::size_t>(m)];
      x(i++) = o.amplitude;
      x.segment(i, d_) = o.precision.array().log().matrix();
      i += d_;
    }
    x.segment(i, M_) = hp.noise.sigma.array().log().matrix();
  }
  if (offAlpha_ >= 0) x(offAlpha_) = std::log(cfg.alpha0);
  if (offLogits_ >= 0) {
    const Mat z = logits_from_pi(state.piHat);
    for (Index n = 0; n < N_; ++n)
      for (Index m = 1; m < M_; ++m) x(offLogits_ + n * (M_ - 1) + m - 1) = z(n, m);
  }
  if (offQu_ >= 0) {
    x.segment(offQu_, Q_) = state.muU;
    Index i = offQu_ + Q_;
    for (Index c = 0; c < Q_; ++c)
      for (Index r = c; r < Q_; ++r) x(i++) = state.suChol(r, c);
  }
  return x;
}

void ParamPacker::unpack(const Vec& x, HyperParams& hp, ModelConfig& cfg, VariationalState& state) const {
  if (x.size() != size_) throw Error("parameter vector length mismatch");
  if (offHyper_ >= 0) {
    Index i = offHyper_;
    if (convolved_) {
      hp.latent.precision = x.segment(i, d_).array().exp().matrix();
      i += d_;
    }
    for (Index m = 0; m < M_; ++m) {
      auto& o = hp.outputs[static_cast<std::size_t>(m)];
      o.amplitude = x(i++);
      o.precision = x.segment(i, d_).array().exp().matrix();
      i += d_;
    }
    hp.noise.sigma = x.segment(i, M_).array().exp().matrix();
  }
  if (offAlpha_ >= 0) cfg.alpha0 = std::exp(x(offAlpha_));
  if (offLogits_ >= 0) {
    Mat z = Mat::Zero(N_, M_);
    for (Index n = 0; n < N_; ++n)
      for (Index m = 1; m < M_; ++m) z(n, m) = x(offLogits_ + n * (M_ - 1) + m - 1);
    state.piHat = softmax_rows(z);
  }
  if (offQu_ >= 0) {
    state.muU = x.segment(offQu_, Q_);
    state.suChol = Mat::Zero(Q_, Q_);
    Index i = offQu_ + Q_;
    for (Index c = 0; c < Q_; ++c)
      for (Index r = c; r < Q_; ++r) state.suChol(r, c) = x(i++);
  }
  if (obj_ != Objective::Scmgp) refresh_state(state, cfg);
}

Vec ParamPacker::gradient(const GradientBundle& g) const {
  Vec x(size_);
  if (offHyper_ >= 0) {
    Index i = offHyper_;
    if (convolved_) {
      x.segment(i, d_) = g.dThetaU;
      i += d_;
    }
    for (Index m = 0; m < M_; ++m) {
      const auto& o = g.dThetaF[static_cast<std::size_t>(m)];
      x(i++) = o.dS;
      x.segment(i, d_) = o.dLogPrecision;
      i += d_;
    }
    x.segment(i, M_) = g.dLogSigma;
  }
  if (offAlpha_ >= 0) x(offAlpha_) = g.dLogAlpha0;
  if (offLogits_ >= 0)
    for (Index n = 0; n < N_; ++n)
      for (Index m = 1; m < M_; ++m) x(offLogits_ + n * (M_ - 1) + m - 1) = g.dPiLogits(n, m);
  if (offQu_ >= 0) {
    x.segment(offQu_, Q_) = g.dMuU;
    Index i = offQu_ + Q_;
    for (Index c = 0; c < Q_; ++c)
      for (Index r = c; r < Q_; ++r) x(i++) = g.dSuChol(r, c);
  }
  return x;
}

std::string describe_params(const HyperParams& hp, const ModelConfig& cfg) {
  std::ostringstream s;
  s << "L=[" << hp.latent.precision.transpose() << "]";
  for (Index m = 0; m < hp.num_outputs(); ++m) {
    const auto& o = hp.outputs[static_cast<std::size_t>(m)];
    s << " S" << m + 1 << "=" << o.amplitude << " L" << m + 1 << "=[" << o.precision.transpose() << "]";
  }
  s << " sigma=[" << hp.noise.sigma.transpose() << "] alpha0=" << cfg.alpha0;
  return s.str();
}

void require_finite_start(double bound, const HyperParams& hp, const ModelConfig& cfg) {
  if (!std::isfinite(bound))
    throw Error("non-finite bound at initialization; parameters: " + describe_params(hp, cfg));
}

// ---- L-BFGS -------------------------------------------------------------------

LbfgsResult maximize_lbfgs(const BoundFn& f, Vec x0, Index maxIter, double tolRel, Index history) {
  LbfgsResult r;
  r.x = std::move(x0);
  Vec g(r.x.size());
  r.value = f(r.x, &g);
  ++r.evaluations;
  r.trajectory.push_back(r.value);
  if (r.x.size() == 0) {
    r.converged = true;
    return r;
  }

  std::vector<Vec> S, Y;  // steps and (descent-side) gradient differences
  std::vector<double> rho;
  Index smallSteps = 0;
  Vec gNew(r.x.size());
  for (Index it = 0; it < maxIter; ++it) {
    if (g.lpNorm<Eigen::Infinity>() < 1e-9) {
      r.converged = true;
      break;
    }
    // Two-loop recursion on h = -f, whose gradient is -g; the ascent direction is p.
    Vec q = g;
    std::vector<double> a(S.size());
    for (std::size_t k = S.size(); k-- > 0;) {
      a[k] = rho[k] * S[k].dot(q);
      q -= a[k] * Y[k];
    }
    if (!S.empty()) q *= S.back().dot(Y.back()) / Y.back().squaredNorm();
    for (std::size_t k = 0; k < S.size(); ++k) {
      const double b = rho[k] * Y[k].dot(q);
      q += (a[k] - b) * S[k];
    }
    Vec p = q;
    double slope = p.dot(g);
    if (!(slope > 0.0)) {
      S.clear();
      Y.clear();
      rho.clear();
      p = g;
      slope = g.squaredNorm();
    }
    double t = S.empty() ? std::min(1.0, 1.0 / g.lpNorm<Eigen::Infinity>()) : 1.0;

    bool accepted = false;
    double fNew = 0.0;
    Vec xNew;
    for (int bt = 0; bt < 40; ++bt) {
      xNew = r.x + t * p;
      try {
        fNew = f(xNew, &gNew);
        ++r.evaluations;
      } catch (const Error&) {
        ++r.evaluations;
        fNew = -std::numeric_limits<double>::infinity();
      }
      if (std::isfinite(fNew) && gNew.allFinite() && fNew >= r.value + 1e-4 * t * slope && fNew > r.value) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      if (!S.empty()) {  // retry from steepest ascent with a fresh memory
        S.clear();
        Y.clear();
        rho.clear();
        continue;
      }
      r.converged = true;  // no improving step exists at working precision
      break;
    }

    const Vec s = xNew - r.x;
    const Vec y = g - gNew;
    const double sy = s.dot(y);
    if (sy > 1e-10 * s.norm() * y.norm()) {
      S.push_back(s);
      Y.push_back(y);
      rho.push_back(1.0 / sy);
      if (static_cast<Index>(S.size()) > history) {
        S.erase(S.begin());
        Y.erase(Y.begin());
        rho.erase(rho.begin());
      }
    }
    const double rel = (fNew - r.value) / std::max(1.0, std::abs(r.value));
    r.x = xNew;
    r.value = fNew;
    g = gNew;
    r.trajectory.push_back(r.value);
    smallSteps = rel < tolRel ? smallSteps + 1 : 0;
    if (smallSteps >= 3) {
      r.converged = true;
      break;
    }
  }
  return r;
}

// ---- fits ---------------------------------------------------------------------

namespace {

std::uint64_t restart_seed(std::uint64_t seed, Index r) {
  return seed + 0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(r);
}

// Unlabeled rows start at the responsibilities of a labeled-only prediction
// under hp. Left untouched when that prediction is unavailable.
void informed_assignments(const Dataset& ds, const ModelConfig& cfg, const HyperParams& hp, VariationalState& st) {
  if (st.unlabeledRows.empty()) return;
  std::vector<Index> count(static_cast<std::size_t>(cfg.M), 0);
  for (Index n : ds.labeled_rows()) ++count[static_cast<std::size_t>(ds.labels[static_cast<std::size_t>(n)])];
  if (std::find(count.begin(), count.end(), Index{0}) != count.end()) return;
  Mat xs(static_cast<Index>(st.unlabeledRows.size()), ds.dim());
  Vec ys(xs.rows());
  for (Index i = 0; i < xs.rows(); ++i) {
    xs.row(i) = ds.X.row(st.unlabeledRows[static_cast<std::size_t>(i)]);
    ys(i) = ds.y(st.unlabeledRows[static_cast<std::size_t>(i)]);
  }
  Mat logp;
  try {
    logp = predictive_log_density(predict_scmgp(ds, hp, xs), ys);
  } catch (const Error&) {
    return;
  }
  for (Index i = 0; i < xs.rows(); ++i) {
    Vec row = (logp.row(i).array() - logp.row(i).maxCoeff()).exp().transpose();
    row /= row.sum();
    floor_simplex_row(row);
    st.piHat.row(st.unlabeledRows[static_cast<std::size_t>(i)]) = row.transpose();
  }
  refresh_state(st, cfg);
}

double elapsed(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

FitReport fit_cvb(const Dataset& ds, const ModelConfig& cfg, const HyperParams& hp0, const OptimizerConfig& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  validate_dataset(ds, cfg);
  hp0.validate();
  opt.validate(ds.size());

  FitReport best;
  bool have = false;
  Index evals = 0;
  std::string firstError;
  for (Index r = 0; r < opt.restarts; ++r) {
    const std::uint64_t seed = restart_seed(opt.seed, r);
    HyperParams hp = hp0;
    ModelConfig c = cfg;
    VariationalState st = init_state(ds, c, hp, seed);
    if (r == 0 && opt.informedInit) informed_assignments(ds, c, hp, st);
    auto closure = [&](const ParamPacker& packer) -> BoundFn {
      return [&, packer](const Vec& x, Vec* grad) {
        HyperParams h = hp;
        ModelConfig cc = c;
        VariationalState s = st;
        packer.unpack(x, h, cc, s);
        if (!grad) return elbo_cvb(ds, cc, h, s);
        const GradientBundle gb = grad_cvb(ds, cc, h, s);
        *grad = packer.gradient(gb);
        return gb.bound;
      };
    };
    double b0;
    try {
      b0 = elbo_cvb(ds, c, hp, st);
    } catch (const Error& e) {
      throw Error(std::string(e.what()) + "; parameters: " + describe_params(hp, c));
    }
    require_finite_start(b0, hp, c);

    std::vector<double> traj;
    bool converged = false;
    LbfgsResult res;
    const ParamPacker joint(hp, c, ds.size(), Objective::Cvb);
    // A restart that hits a numerical failure is dropped; the fit fails only if all do.
    try {
      // Block-coordinate rounds (kernel and noise, then assignments), then everything jointly.
      const ParamPacker hyper(hp, c, ds.size(), Objective::Cvb, {true, true, false, false});
      const ParamPacker assign(hp, c, ds.size(), Objective::Cvb, {false, false, true, false});
      traj.push_back(b0);
      for (Index k = 0; k < opt.warmupRounds && opt.warmupIters > 0; ++k)
        for (const ParamPacker* pk : {&hyper, &assign}) {
          if (pk->size() == 0) continue;
          const LbfgsResult w =
              maximize_lbfgs(closure(*pk), pk->pack(hp, c, st), opt.warmupIters, opt.tolRelBound, opt.lbfgsHistory);
          evals += w.evaluations;
          pk->unpack(w.x, hp, c, st);
          traj.insert(traj.end(), w.trajectory.begin() + 1, w.trajectory.end());
        }
      res = maximize_lbfgs(closure(joint), joint.pack(hp, c, st), opt.maxIter, opt.tolRelBound, opt.lbfgsHistory);
    } catch (const Error& e) {
      if (firstError.empty()) firstError = e.what();
      continue;
    }
    evals += res.evaluations + 1;
    converged = res.converged;
    traj.insert(traj.end(), res.trajectory.begin() + 1, res.trajectory.end());
    if (!have || res.value > best.finalBound) {
      have = true;
      joint.unpack(res.x, hp, c, st);
      best.boundTrajectory = traj;
      best.finalHp = hp;
      best.finalState = st;
      best.finalCfg = c;
      best.initialBound = traj.front();
      best.finalBound = res.value;
      best.converged = converged;
      best.bestSeed = seed;
    }
  }
  if (!have) throw Error("every restart failed; first failure: " + firstError);
  best.evaluations = evals;
  best.wallClock = elapsed(t0);
  return best;
}

namespace {

struct Adam {
  Vec m, v;
  Index t = 0;
  explicit Adam(Index n) : m(Vec::Zero(n)), v(Vec::Zero(n)) {}
  Vec step(const Vec& g, double lr) {
    constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    ++t;
    m = b1 * m + (1.0 - b1) * g;
    v = b2 * v + (1.0 - b2) * g.cwiseAbs2();
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(t));
    return lr * ((m / c1).array() / ((v / c2).array().sqrt() + eps)).matrix();
  }
};

}  // namespace

FitReport fit_svb_em(const Dataset& ds, const ModelConfig& cfg, const HyperParams& hp0, const OptimizerConfig& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  validate_dataset(ds, cfg);
  hp0.validate();
  opt.validate(ds.size());
  const Index N = ds.size();
  const Index b = opt.batchSize == 0 ? N : opt.batchSize;
  const bool fullBatch = b == N;

  FitReport rep;
  HyperParams hp = hp0;
  ModelConfig c = cfg;
  VariationalState st = init_state(ds, c, hp, opt.seed);
  if (opt.informedInit) informed_assignments(ds, c, hp, st);
  if (hp.num_inducing() > 0) {
    const QuOptimum q = optimal_qu(ds, hp, st);
    st.muU = q.muU;
    st.suChol = q.suChol;
  }
  const double b0 = elbo_svb(ds, c, hp, st);
  require_finite_start(b0, hp, c);
  rep.boundTrajectory.push_back(b0);
  rep.initialBound = b0;
  Index evals = 1;

  std::mt19937_64 rng(opt.seed ^ 0x5DEECE66DULL);
  std::vector<Index> perm(static_cast<std::size_t>(N));
  std::iota(perm.begin(), perm.end(), Index{0});
  auto next_batch = [&]() {
    if (fullBatch) return perm;
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<Index> batch(perm.begin(), perm.begin() + b);
    std::sort(batch.begin(), batch.end());
    return batch;
  };

  const ParamPacker statPack(hp, c, N, Objective::Svb, {false, false, true, true});
  const ParamPacker hypPack(hp, c, N, Objective::Svb, {true, true, false, false});
  double current = b0;
  Index globalStep = 0;
  double statScale = 1.0, hypScale = 1.0;

  const bool quasiNewton = fullBatch && opt.method == OptMethod::QuasiNewton;
  auto run_phase = [&](const ParamPacker& pk, Index iters, double& lrScale) {
    if (pk.size() == 0) return;
    if (quasiNewton) {
      const BoundFn f = [&](const Vec& x, Vec* grad) {
        HyperParams h = hp;
        ModelConfig cc = c;
        VariationalState s = st;
        pk.unpack(x, h, cc, s);
        if (!grad) return elbo_svb(ds, cc, h, s);
        const GradientBundle gb = grad_svb(ds, cc, h, s);
        *grad = pk.gradient(gb);
        return gb.bound;
      };
      const LbfgsResult r = maximize_lbfgs(f, pk.pack(hp, c, st), iters, opt.tolRelBound, opt.lbfgsHistory);
      evals += r.evaluations;
      if (r.value >= current) {
        pk.unpack(r.x, hp, c, st);
        current = r.value;
      }
      return;
    }
    Adam adam(pk.size());
    for (Index it = 0; it < iters; ++it) {
      ++globalStep;
      const std::vector<Index> batch = next_batch();
      const GradientBundle g = grad_svb(ds, c, hp, st, std::span<const Index>(batch));
      ++evals;
      const Vec grad = pk.gradient(g);
      if (!grad.allFinite()) break;
      const double lr = lrScale * opt.stepSize / std::sqrt(static_cast<double>(globalStep));
      const Vec x = pk.pack(hp, c, st);
      HyperParams h2 = hp;
      ModelConfig c2 = c;
      VariationalState s2 = st;
      pk.unpack(x + adam.step(grad, lr), h2, c2, s2);
      if (fullBatch) {
        double trial = -std::numeric_limits<double>::infinity();
        try {
          trial = elbo_svb(ds, c2, h2, s2);
        } catch (const Error&) {
        }
        ++evals;
        if (!(std::isfinite(trial) && trial >= current)) {
          lrScale *= 0.5;
          continue;
        }
        current = trial;
      }
      hp = std::move(h2);
      c = std::move(c2);
      st = std::move(s2);
    }
  };

  for (Index outer = 0; outer < opt.emOuterIters; ++outer) {
    if (fullBatch && hp.num_inducing() > 0) {
      VariationalState s2 = st;
      const QuOptimum q = optimal_qu(ds, hp, st);
      s2.muU = q.muU;
      s2.suChol = q.suChol;
      const double trial = elbo_svb(ds, c, hp, s2);
      ++evals;
      if (std::isfinite(trial) && trial >= current) {
        st = std::move(s2);
        current = trial;
      }
    }
    run_phase(statPack, opt.emInnerStatIters, statScale);
    run_phase(hypPack, opt.emInnerHypIters, hypScale);
    if (!fullBatch) {
      current = elbo_svb(ds, c, hp, st);
      ++evals;
    }
    rep.boundTrajectory.push_back(current);
  }

  rep.finalHp = hp;
  rep.finalState = st;
  rep.finalCfg = c;
  rep.finalBound = current;
  rep.converged = true;
  rep.evaluations = evals;
  rep.bestSeed = opt.seed;
  rep.wallClock = elapsed(t0);
  return rep;
}

}  // namespace wsmgp
