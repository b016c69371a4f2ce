#include "wsmgp/instances.hpp"

#include "wsmgp/linalg.hpp"

#include <random>

namespace wsmgp {

Instance random_instance(std::uint64_t seed, const InstanceSpec& spec) {
  std::mt19937_64 rng(seed * 7919ULL + 17ULL);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> g(0.0, 1.0);
  auto unif = [&](double a, double b) { return a + (b - a) * u(rng); };

  Instance in;
  const Index N = spec.N, M = spec.M;
  Mat X(N, 1);
  for (Index n = 0; n < N; ++n) X(n, 0) = unif(-1.0, 1.0);

  HyperParams& hp = in.hp;
  hp.latent.precision = Vec::Constant(1, unif(5.0, 40.0));
  for (Index m = 0; m < M; ++m) hp.outputs.push_back({unif(0.6, 2.0) * (u(rng) < 0.2 ? -1.0 : 1.0), Vec::Constant(1, unif(5.0, 80.0))});
  hp.noise.sigma.resize(M);
  for (Index m = 0; m < M; ++m) hp.noise.sigma(m) = unif(0.2, 0.6);
  if (spec.denseW) {
    hp.inducing.W = X;
  } else {
    hp.inducing.W.resize(spec.Q, 1);
    for (Index q = 0; q < spec.Q; ++q) hp.inducing.W(q, 0) = unif(-1.0, 1.0);
  }

  std::vector<int> labels(static_cast<std::size_t>(N), kUnlabeled);
  Vec y(N);
  for (Index n = 0; n < N; ++n) {
    const int src = static_cast<int>(std::uniform_int_distribution<Index>(0, M - 1)(rng));
    if (u(rng) < spec.labeledFrac) labels[static_cast<std::size_t>(n)] = src;
    const Vec x = X.row(n).transpose();
    y(n) = std::sqrt(std::abs(eval_output_cov(x, src, x, src, hp))) * g(rng) + hp.noise.sigma(src) * g(rng);
  }
  in.ds = make_dataset(std::move(X), std::move(y), std::move(labels), M);
  // Soft label priors on some labeled rows.
  for (Index n = 0; n < N; ++n)
    if (in.ds.is_labeled(n) && u(rng) < 0.5) {
      Vec p(M);
      for (Index m = 0; m < M; ++m) p(m) = unif(0.05, 1.0);
      p(in.ds.labels[static_cast<std::size_t>(n)]) += 1.0;
      in.ds.priorPi.row(n) = (p / p.sum()).transpose();
    }

  in.cfg.M = M;
  in.cfg.Q = hp.num_inducing();
  in.cfg.alpha0 = unif(0.2, 3.0);
  in.state = init_state(in.ds, in.cfg, hp, seed);
  for (Index n = 0; n < N; ++n) {
    Vec p(M);
    for (Index m = 0; m < M; ++m) p(m) = unif(0.1, 1.0);
    in.state.piHat.row(n) = (p / p.sum()).transpose();
  }
  refresh_state(in.state, in.cfg);
  if (spec.randomQu && hp.num_inducing() > 0) {
    const Index Q = hp.num_inducing();
    in.state.muU.resize(Q);
    for (Index q = 0; q < Q; ++q) in.state.muU(q) = g(rng);
    Mat L = Mat::Zero(Q, Q);
    for (Index c = 0; c < Q; ++c) {
      L(c, c) = unif(0.3, 1.0);
      for (Index r = c + 1; r < Q; ++r) L(r, c) = 0.3 * g(rng);
    }
    in.state.suChol = L;
  }
  return in;
}

}  // namespace wsmgp
