#pragma once

#include <cstdint>

#include "cgraph/graph.hpp"

namespace cgraph {

struct RandomGraphOptions {
  std::size_t nodes = 40;     // approximate target; patterns may overshoot by a few nodes
  bool patterns = true;       // plant FMA, AdaGrad, identity, constant and Repeat patterns
  bool update_edges = true;   // sometimes add an update edge into a same-shaped Var
};

/// Reproducible random graph over mutually broadcastable shapes with bounded
/// values. Var slots hold random inputs; the graph is frozen and validates.
Graph random_graph(std::uint64_t seed, const RandomGraphOptions& options = {});

}  // namespace cgraph
