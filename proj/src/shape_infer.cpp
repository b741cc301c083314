#include "cgraph/shape_infer.hpp"

#include <algorithm>

namespace cgraph {

Shape broadcast_shape(const Shape& a, const Shape& b) {
  const auto rank = std::max(a.rank(), b.rank());
  std::vector<std::int64_t> dims(rank, 1);
  for (std::size_t i = 0; i < rank; ++i) {
    // i counts from the trailing axis
    std::int64_t da = i < a.rank() ? a.dims()[a.rank() - 1 - i] : 1;
    std::int64_t db = i < b.rank() ? b.dims()[b.rank() - 1 - i] : 1;
    if (da != db && da != 1 && db != 1) {
      throw ShapeError("cannot broadcast " + a.to_string() + " with " + b.to_string());
    }
    dims[rank - 1 - i] = std::max(da, db);
  }
  return Shape(std::move(dims));
}

Shape infer_node_shape(const Op& op, const std::vector<Shape>& in) {
  const auto kind = op.kind();
  if (in.size() != op.arity()) throw ShapeError("operand count does not match arity");
  switch (kind) {
    case OpKind::Var:
    case OpKind::Const:
      throw ShapeError("leaf shapes are not inferred");
    case OpKind::Add:
    case OpKind::Sub:
    case OpKind::Mul:
    case OpKind::Div:
    case OpKind::Pow:
      return broadcast_shape(in[0], in[1]);
    case OpKind::FMA:
      return broadcast_shape(broadcast_shape(in[0], in[1]), in[2]);
    case OpKind::Neg:
    case OpKind::Sin:
    case OpKind::Cos:
    case OpKind::Exp:
    case OpKind::Sqrt:
    case OpKind::ScalarAdd:
    case OpKind::ScalarMul:
      return in[0];
    case OpKind::FusedAdagrad:
      if (broadcast_shape(in[0], in[1]) != in[0]) {
        throw ShapeError("FusedAdagrad accumulator " + in[1].to_string() + " must broadcast to gradient " +
                         in[0].to_string());
      }
      return in[0];
    case OpKind::Sum: {
      const auto& axis = op.params<SumParams>().axis;
      if (!axis) return Shape{};
      if (static_cast<std::size_t>(*axis) >= in[0].rank()) {
        throw ShapeError("Sum axis " + std::to_string(*axis) + " out of range for " + in[0].to_string());
      }
      auto dims = in[0].dims();
      dims.erase(dims.begin() + *axis);
      return Shape(std::move(dims));
    }
    case OpKind::MatMul: {
      if (in[0].rank() != 2 || in[1].rank() != 2) {
        throw ShapeError("MatMul needs rank-2 operands, got " + in[0].to_string() + " and " + in[1].to_string());
      }
      if (in[0][1] != in[1][0]) {
        throw ShapeError("MatMul inner dimensions differ: " + in[0].to_string() + " x " + in[1].to_string());
      }
      return Shape{in[0][0], in[1][1]};
    }
    case OpKind::Reshape: {
      const auto& target = op.params<ReshapeParams>().target;
      if (target.numel() != in[0].numel()) {
        throw ShapeError("Reshape " + in[0].to_string() + " -> " + target.to_string() + " changes element count");
      }
      return target;
    }
    case OpKind::Repeat: {
      const auto& p = op.params<RepeatParams>();
      if (static_cast<std::size_t>(p.axis) >= in[0].rank()) {
        throw ShapeError("Repeat axis " + std::to_string(p.axis) + " out of range for " + in[0].to_string());
      }
      auto dims = in[0].dims();
      dims[p.axis] *= p.count;
      return Shape(std::move(dims));
    }
    case OpKind::Delay:
      return op.params<DelayParams>().out_shape;
  }
  throw ShapeError("unhandled op kind");
}

std::vector<Shape> infer_shapes(const Graph& graph, const std::map<NodeId, Shape>& input_shapes) {
  const auto order = topological_order(graph);
  std::vector<Shape> shapes(graph.size());
  auto fail = [](NodeId id, const std::string& why) {
    return ShapeError("node " + std::to_string(id) + ": " + why);
  };

  for (auto id : order.sequence) {
    const Node& n = graph.node(id);
    switch (n.op.kind()) {
      case OpKind::Var: {
        if (auto it = input_shapes.find(id); it != input_shapes.end()) {
          shapes[id] = it->second;
        } else if (n.declared_shape) {
          shapes[id] = *n.declared_shape;
        } else if (graph.value(id)) {
          shapes[id] = graph.value(id)->shape();
        } else {
          throw fail(id, "missing input shape for Var '" + n.name + "'");
        }
        break;
      }
      case OpKind::Const:
        if (!graph.value(id)) throw fail(id, "Const has no value");
        shapes[id] = graph.value(id)->shape();
        break;
      default: {
        std::vector<Shape> operands;
        operands.reserve(n.preds.size());
        for (auto p : n.preds) operands.push_back(shapes[p]);
        try {
          shapes[id] = infer_node_shape(n.op, operands);
        } catch (const ShapeError& e) {
          throw fail(id, std::string(op_name(n.op.kind())) + ": " + e.what());
        }
      }
    }
  }
  return shapes;
}

std::vector<std::size_t> node_sizes(const std::vector<Shape>& shapes) {
  std::vector<std::size_t> sizes;
  sizes.reserve(shapes.size());
  for (const auto& s : shapes) sizes.push_back(s.size_bytes());
  return sizes;
}

}  // namespace cgraph
