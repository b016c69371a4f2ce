#include "wsmgp/synthetic.hpp"

#include "wsmgp/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace wsmgp {

void SyntheticConfig::validate() const {
  if (M < 1) throw Error("M must be at least 1");
  if (perSourceCount < 1) throw Error("perSourceCount must be at least 1");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw Error("gamma must lie in (0, 1]");
  if (!(lFrac >= 0.0 && lFrac <= 1.0)) throw Error("lFrac must lie in [0, 1]");
  if (!(noiseLabelFlip >= 0.0 && noiseLabelFlip <= 1.0)) throw Error("noiseLabelFlip must lie in [0, 1]");
  if (!(xMax > xMin)) throw Error("xMax must exceed xMin");
  if (gridSize < 2) throw Error("gridSize must be at least 2");
  if (heldOutPerSource < 0) throw Error("heldOutPerSource must be non-negative");
  if (hp.num_outputs() != M) throw Error("generating parameters must have M outputs");
  if (hp.family != KernelFamily::Convolved) throw Error("generating kernel must be the convolved family");
  if (hp.dim() != 1) throw Error("synthetic generation is one-dimensional");
}

HyperParams default_generating_hp() {
  HyperParams hp;
  hp.latent.precision = Vec::Constant(1, 100.0);
  hp.outputs = {{4.0, Vec::Constant(1, 120.0)}, {5.0, Vec::Constant(1, 200.0)}};
  hp.noise.sigma = Vec::Constant(2, 0.25);
  hp.inducing.W = Mat::Zero(1, 1);
  return hp;
}

HyperParams similar_curves_hp() {
  HyperParams hp = default_generating_hp();
  hp.outputs.push_back({5.5, Vec::Constant(1, 250.0)});
  hp.noise.sigma = Vec::Constant(3, 0.25);
  return hp;
}

void flip_labels(Dataset& ds, Index M, double p, std::uint64_t seed) {
  if (p <= 0.0 || M < 2) return;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (Index n = 0; n < ds.size(); ++n) {
    auto& l = ds.labels[static_cast<std::size_t>(n)];
    const double draw = u(rng);
    const auto shift = static_cast<int>(std::uniform_int_distribution<Index>(1, M - 1)(rng));
    if (l == kUnlabeled || draw >= p) continue;
    l = (l + shift) % static_cast<int>(M);
    ds.priorPi.row(n).setZero();
    ds.priorPi(n, l) = 1.0;
  }
}

SyntheticData generate_synthetic(const SyntheticConfig& sc) {
  sc.validate();
  const Index M = sc.M;
  std::mt19937_64 rng(sc.seed);
  std::uniform_real_distribution<double> ux(sc.xMin, sc.xMax);
  std::normal_distribution<double> gauss(0.0, 1.0);

  // Training inputs per source, source 1 subsampled.
  std::vector<std::vector<double>> xs(static_cast<std::size_t>(M));
  for (Index m = 0; m < M; ++m) {
    auto& v = xs[static_cast<std::size_t>(m)];
    for (Index i = 0; i < sc.perSourceCount; ++i) v.push_back(ux(rng));
  }
  {
    auto& v = xs[0];
    const auto keep = static_cast<std::size_t>(std::ceil(sc.gamma * static_cast<double>(sc.perSourceCount) - 1e-9));
    std::shuffle(v.begin(), v.end(), rng);
    v.resize(keep);
  }
  std::vector<std::vector<double>> hx(static_cast<std::size_t>(M));
  for (Index m = 0; m < M; ++m)
    for (Index i = 0; i < sc.heldOutPerSource; ++i) hx[static_cast<std::size_t>(m)].push_back(ux(rng));

  // Joint points: (output, x) for training, grid and held-out inputs.
  struct Pt {
    Index m;
    double x;
  };
  std::vector<Pt> pts;
  for (Index m = 0; m < M; ++m)
    for (double x : xs[static_cast<std::size_t>(m)]) pts.push_back({m, x});
  const Index nTrain = static_cast<Index>(pts.size());
  Mat grid(sc.gridSize, 1);
  for (Index g = 0; g < sc.gridSize; ++g)
    grid(g, 0) = sc.xMin + (sc.xMax - sc.xMin) * static_cast<double>(g) / static_cast<double>(sc.gridSize - 1);
  for (Index m = 0; m < M; ++m)
    for (Index g = 0; g < sc.gridSize; ++g) pts.push_back({m, grid(g, 0)});
  for (Index m = 0; m < M; ++m)
    for (double x : hx[static_cast<std::size_t>(m)]) pts.push_back({m, x});

  const Index P = static_cast<Index>(pts.size());
  Mat K(P, P);
  Vec a(1), b(1);
  for (Index i = 0; i < P; ++i)
    for (Index j = 0; j <= i; ++j) {
      a(0) = pts[static_cast<std::size_t>(i)].x;
      b(0) = pts[static_cast<std::size_t>(j)].x;
      K(i, j) = K(j, i) = eval_output_cov(a, pts[static_cast<std::size_t>(i)].m, b, pts[static_cast<std::size_t>(j)].m, sc.hp);
    }
  const JitteredCholesky jc = cholesky_with_jitter(K, "synthetic joint covariance", 1e-10, 1e-4);
  Vec z(P);
  for (Index i = 0; i < P; ++i) z(i) = gauss(rng);
  Vec f = jc.llt.matrixL() * z;
  for (Index i = 0; i < P; ++i)
    if (M > 1 && pts[static_cast<std::size_t>(i)].m == 1) f(i) += sc.bias;

  SyntheticData out;
  auto& gt = out.truth;
  gt.grid = grid;
  for (Index m = 0; m < M; ++m) gt.curves.push_back(f.segment(nTrain + m * sc.gridSize, sc.gridSize));
  const Index hOff = nTrain + M * sc.gridSize;
  gt.heldOutX.resize(P - hOff, 1);
  gt.heldOutY.resize(P - hOff);
  for (Index i = hOff; i < P; ++i) {
    const auto& p = pts[static_cast<std::size_t>(i)];
    gt.heldOutX(i - hOff, 0) = p.x;
    gt.heldOutY(i - hOff) = f(i) + sc.hp.noise.sigma(p.m) * gauss(rng);
    gt.heldOutSource.push_back(static_cast<int>(p.m));
  }

  // Noisy training targets and retained labels.
  Vec y(nTrain);
  for (Index i = 0; i < nTrain; ++i) y(i) = f(i) + sc.hp.noise.sigma(pts[static_cast<std::size_t>(i)].m) * gauss(rng);
  std::vector<int> labels(static_cast<std::size_t>(nTrain), kUnlabeled);
  Index start = 0;
  for (Index m = 0; m < M; ++m) {
    const Index cnt = static_cast<Index>(xs[static_cast<std::size_t>(m)].size());
    std::vector<Index> idx(static_cast<std::size_t>(cnt));
    std::iota(idx.begin(), idx.end(), start);
    std::shuffle(idx.begin(), idx.end(), rng);
    const auto keep = static_cast<std::size_t>(std::ceil(sc.lFrac * static_cast<double>(cnt) - 1e-9));
    for (std::size_t k = 0; k < keep; ++k) labels[static_cast<std::size_t>(idx[k])] = static_cast<int>(m);
    start += cnt;
  }

  std::vector<Index> order(static_cast<std::size_t>(nTrain));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index i, Index j) {
    return pts[static_cast<std::size_t>(i)].x < pts[static_cast<std::size_t>(j)].x;
  });
  Mat X(nTrain, 1);
  Vec ys(nTrain);
  std::vector<int> ls(static_cast<std::size_t>(nTrain));
  for (Index r = 0; r < nTrain; ++r) {
    const Index i = order[static_cast<std::size_t>(r)];
    X(r, 0) = pts[static_cast<std::size_t>(i)].x;
    ys(r) = y(i);
    ls[static_cast<std::size_t>(r)] = labels[static_cast<std::size_t>(i)];
    gt.labels.push_back(static_cast<int>(pts[static_cast<std::size_t>(i)].m));
  }
  out.ds = make_dataset(std::move(X), std::move(ys), std::move(ls), M);
  flip_labels(out.ds, M, sc.noiseLabelFlip, sc.seed ^ 0xF11FULL);
  return out;
}

}  // namespace wsmgp
