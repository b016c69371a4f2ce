#include "wsmgp/model.hpp"

#include "wsmgp/linalg.hpp"

#include <cmath>
#include <random>
#include <sstream>

namespace wsmgp {

Index Dataset::num_labeled() const {
  Index c = 0;
  for (int l : labels) c += (l != kUnlabeled);
  return c;
}

std::vector<Index> Dataset::labeled_rows() const {
  std::vector<Index> r;
  for (Index n = 0; n < size(); ++n)
    if (is_labeled(n)) r.push_back(n);
  return r;
}

std::vector<Index> Dataset::unlabeled_rows() const {
  std::vector<Index> r;
  for (Index n = 0; n < size(); ++n)
    if (!is_labeled(n)) r.push_back(n);
  return r;
}

Dataset make_dataset(Mat X, Vec y, std::vector<int> labels, Index M) {
  Dataset ds;
  ds.X = std::move(X);
  ds.y = std::move(y);
  ds.labels = std::move(labels);
  ds.priorPi = Mat::Zero(ds.y.size(), M);
  for (Index n = 0; n < ds.size(); ++n) {
    const int l = ds.labels[static_cast<std::size_t>(n)];
    if (l >= 0 && l < M) ds.priorPi(n, l) = 1.0;
  }
  return ds;
}

void validate_dataset(const Dataset& ds, const ModelConfig& cfg) {
  std::ostringstream msg;
  if (cfg.M < 1) throw Error("M must be at least 1");
  if (cfg.Q < 1) throw Error("Q must be at least 1");
  if (!(cfg.alpha0 > 0.0)) throw Error("alpha0 must be positive");
  const Index N = ds.size();
  if (N < 1) throw Error("dataset is empty");
  if (ds.X.rows() != N) throw Error("X and y row counts differ");
  if (static_cast<Index>(ds.labels.size()) != N) throw Error("label vector length differs from N");
  if (ds.priorPi.rows() != N || ds.priorPi.cols() != cfg.M) throw Error("prior matrix must be N x M");
  if (!ds.X.allFinite()) throw Error("X contains non-finite values");
  for (Index n = 0; n < N; ++n) {
    if (!std::isfinite(ds.y(n))) {
      msg << "y contains a non-finite value at row " << n + 1;
      throw Error(msg.str());
    }
    const int l = ds.labels[static_cast<std::size_t>(n)];
    if (l == kUnlabeled) {
      if (ds.priorPi.row(n).cwiseAbs().sum() != 0.0) {
        msg << "unlabeled row " << n + 1 << " carries a label prior";
        throw Error(msg.str());
      }
      continue;
    }
    if (l < 0 || l >= cfg.M) {
      msg << "label " << l + 1 << " at row " << n + 1 << " is outside 1.." << cfg.M;
      throw Error(msg.str());
    }
    const auto row = ds.priorPi.row(n);
    if ((row.array() < 0.0).any() || !row.allFinite() || std::abs(row.sum() - 1.0) > 1e-12) {
      msg << "label prior row " << n + 1 << " is not on the simplex (sum " << row.sum() << ")";
      throw Error(msg.str());
    }
  }
}

void floor_simplex_row(Eigen::Ref<Vec> row, double floor) {
  const Index M = row.size();
  for (Index m = 0; m < M; ++m)
    if (!(row(m) > 0.0)) row(m) = 0.0;
  double total = row.sum();
  if (!(total > 0.0)) {
    row.setConstant(1.0 / static_cast<double>(M));
    return;
  }
  row /= total;
  // Pin entries below the floor and rescale the rest; repeat until stable.
  std::vector<bool> pinned(static_cast<std::size_t>(M), false);
  for (int pass = 0; pass < static_cast<int>(M) + 1; ++pass) {
    bool changed = false;
    double free_mass = 0.0;
    Index npinned = 0;
    for (Index m = 0; m < M; ++m) {
      if (!pinned[static_cast<std::size_t>(m)] && row(m) < floor) {
        pinned[static_cast<std::size_t>(m)] = true;
        changed = true;
      }
      if (pinned[static_cast<std::size_t>(m)])
        ++npinned;
      else
        free_mass += row(m);
    }
    const double target = 1.0 - floor * static_cast<double>(npinned);
    for (Index m = 0; m < M; ++m)
      row(m) = pinned[static_cast<std::size_t>(m)] ? floor : row(m) * target / free_mass;
    if (!changed) break;
  }
}

Vec label_prior_row(const Dataset& ds, Index n) {
  Vec r = ds.priorPi.row(n).transpose();
  floor_simplex_row(r);
  return r;
}

void refresh_state(VariationalState& state, const ModelConfig& cfg) {
  for (Index n = 0; n < state.piHat.rows(); ++n) {
    Vec r = state.piHat.row(n).transpose();
    floor_simplex_row(r);
    state.piHat.row(n) = r.transpose();
  }
  state.alphaHat.resize(static_cast<Index>(state.unlabeledRows.size()), state.piHat.cols());
  for (std::size_t i = 0; i < state.unlabeledRows.size(); ++i)
    state.alphaHat.row(static_cast<Index>(i)) = state.piHat.row(state.unlabeledRows[i]).array() + cfg.alpha0;
}

VariationalState init_state(const Dataset& ds, const ModelConfig& cfg, const HyperParams& hp,
                            std::uint64_t seed) {
  const Index N = ds.size();
  const Index M = cfg.M;
  VariationalState s;
  s.piHat.resize(N, M);
  s.unlabeledRows = ds.unlabeled_rows();

  std::mt19937_64 rng(seed);
  std::gamma_distribution<double> gamma1(1.0, 1.0);
  for (Index n = 0; n < N; ++n) {
    if (ds.is_labeled(n)) {
      s.piHat.row(n) = label_prior_row(ds, n).transpose();
      continue;
    }
    Vec g(M);
    for (Index m = 0; m < M; ++m) g(m) = gamma1(rng);
    g /= g.sum();
    s.piHat.row(n) = (0.95 / static_cast<double>(M) + 0.05 * g.array()).matrix().transpose();
  }
  refresh_state(s, cfg);

  const Index Q = hp.num_inducing();
  s.muU = Vec::Zero(Q);
  if (Q > 0) {
    JitteredCholesky jc = cholesky_with_jitter(kuu_matrix(hp.inducing.W, hp.latent), "inducing kernel");
    s.suChol = jc.llt.matrixL();
  } else {
    s.suChol.resize(0, 0);
  }
  return s;
}

}  // namespace wsmgp
