#pragma once

#include <map>
#include <vector>

#include "cgraph/graph.hpp"
#include "cgraph/tensor.hpp"

namespace cgraph {

/// Trailing-dimension broadcasting. Throws ShapeError on an incompatible axis.
Shape broadcast_shape(const Shape& a, const Shape& b);

/// Output shape of one node given its operands' shapes. Throws ShapeError naming the rule broken.
Shape infer_node_shape(const Op& op, const std::vector<Shape>& operands);

/// Shapes of every node, indexed by node id.
///
/// Var shapes come from `input_shapes`, then the node's declared shape, then its
/// value slot; Const shapes from the value slot. Throws ShapeError with the
/// offending node id when a shape is missing or an op's rule is violated.
std::vector<Shape> infer_shapes(const Graph& graph, const std::map<NodeId, Shape>& input_shapes = {});

/// Byte size of each node's output, the single sizing source for planning and evaluation.
std::vector<std::size_t> node_sizes(const std::vector<Shape>& shapes);

}  // namespace cgraph
