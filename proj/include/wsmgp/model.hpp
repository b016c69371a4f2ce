#pragma once

#include "wsmgp/kernels.hpp"
#include "wsmgp/types.hpp"

#include <cstdint>
#include <vector>

namespace wsmgp {

inline constexpr int kUnlabeled = -1;

/// Observations with optional group labels. Labels are 0-based internally
/// (file formats and messages use 1-based groups). Unlabeled rows carry a zero
/// prior row.
struct Dataset {
  Mat X;                    // N x d
  Vec y;                    // N
  std::vector<int> labels;  // kUnlabeled or 0..M-1
  Mat priorPi;              // N x M, label-prior rows for labeled observations

  Index size() const { return y.size(); }
  Index dim() const { return X.cols(); }
  bool is_labeled(Index n) const { return labels[static_cast<std::size_t>(n)] != kUnlabeled; }
  Index num_labeled() const;
  std::vector<Index> labeled_rows() const;
  std::vector<Index> unlabeled_rows() const;
};

/// Dataset whose labeled rows get one-hot priors on their label.
Dataset make_dataset(Mat X, Vec y, std::vector<int> labels, Index M);

struct ModelConfig {
  Index M = 2;
  Index Q = 30;
  double alpha0 = 0.3;
  bool useDirichlet = true;
  bool optimizeAlpha0 = true;
};

/// Throws Error describing the first violated invariant.
void validate_dataset(const Dataset& ds, const ModelConfig& cfg);

/// Clamps a probability row to the floored simplex: entries >= floor, sum 1.
void floor_simplex_row(Eigen::Ref<Vec> row, double floor = kPiFloor);

/// Label prior for row n as used by every bound and oracle: the stored prior
/// row projected onto the floored simplex.
Vec label_prior_row(const Dataset& ds, Index n);

/// Variational parameters. alphaHat rows follow `unlabeledRows` and are always
/// alpha0 + PiHat on those rows. q(u) covariance is kept as its Cholesky factor.
struct VariationalState {
  Mat piHat;                          // N x M
  std::vector<Index> unlabeledRows;
  Mat alphaHat;                       // N^u x M
  Vec muU;                            // Q
  Mat suChol;                         // Q x Q lower triangular

  Mat su() const { return suChol * suChol.transpose(); }
};

/// Re-applies the simplex floor to every row and resets alphaHat to its optimum.
void refresh_state(VariationalState& state, const ModelConfig& cfg);

/// Deterministic initialization: labeled rows copy their floored prior,
/// unlabeled rows are 0.95 * uniform + 0.05 * Dirichlet(1) noise, q(u) = p(u).
VariationalState init_state(const Dataset& ds, const ModelConfig& cfg, const HyperParams& hp,
                            std::uint64_t seed);

}  // namespace wsmgp
