#pragma once

#include "wsmgp/model.hpp"

#include <cstdint>

namespace wsmgp {

/// A small seeded problem for checks: d = 1 inputs in [-1, 1], random convolved
/// kernel parameters, roughly half the rows labeled, targets drawn from the prior.
struct Instance {
  Dataset ds;
  ModelConfig cfg;
  HyperParams hp;
  VariationalState state;
};

struct InstanceSpec {
  Index N = 10;
  Index M = 2;
  Index Q = 3;
  bool denseW = false;       // W = X (Q ignored)
  double labeledFrac = 0.5;
  bool randomQu = true;      // random q(u) instead of the prior
};

Instance random_instance(std::uint64_t seed, const InstanceSpec& spec = {});

}  // namespace wsmgp
