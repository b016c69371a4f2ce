#pragma once

#include "wsmgp/model.hpp"

#include <cstdint>
#include <vector>

namespace wsmgp {

struct SyntheticConfig {
  Index M = 2;
  Index perSourceCount = 120;
  double gamma = 1.0;           // fraction of source 1 kept
  double lFrac = 0.2;           // labeled fraction per source
  double bias = 0.0;            // added to source 2
  HyperParams hp;               // generating convolved kernel
  double noiseLabelFlip = 0.0;  // chance each retained label is replaced by another group
  double xMin = -1.0;
  double xMax = 1.0;
  Index gridSize = 200;
  Index heldOutPerSource = 40;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Generating parameters of the two-source experiment: L1 = 120, L2 = 200, S1 = 4, S2 = 5,
/// L = 100, sigma = 0.25, d = 1.
HyperParams default_generating_hp();

/// Three outputs where the second and third curves are close.
HyperParams similar_curves_hp();

struct GroundTruth {
  std::vector<int> labels;   // true source of every dataset row
  Mat grid;                  // gridSize x d
  std::vector<Vec> curves;   // per output on the grid, bias included
  Mat heldOutX;
  Vec heldOutY;
  std::vector<int> heldOutSource;
};

struct SyntheticData {
  Dataset ds;
  GroundTruth truth;
};

/// Exact joint Gaussian draw of all outputs at the training, grid and held-out inputs.
/// Rows of the dataset are sorted by x.
SyntheticData generate_synthetic(const SyntheticConfig& sc);

/// Replaces each labeled row's label by a different group with probability p,
/// drawing from a stream seeded by `seed` only.
void flip_labels(Dataset& ds, Index M, double p, std::uint64_t seed);

}  // namespace wsmgp
