#include "cgraph/evaluator.hpp"

#include <bit>
#include <cstdint>
#include <set>

#include "cgraph/shape_infer.hpp"

namespace cgraph {
namespace {

constexpr std::uint64_t kPoisonBits = 0x7ff4deadbeef0001ULL;

double poison_value() { return std::bit_cast<double>(kPoisonBits); }
bool is_poison(double v) { return std::bit_cast<std::uint64_t>(v) == kPoisonBits; }

// Resolves the value of every Var (explicit input, else the graph's slot) and checks its shape.
std::vector<const Tensor*> bind_leaves(const Graph& graph, const InputMap& inputs) {
  std::vector<const Tensor*> leaves(graph.size(), nullptr);
  for (const auto& [id, tensor] : inputs) {
    if (!graph.contains(id) || graph.node(id).op.kind() != OpKind::Var) {
      throw EvalError("input given for node " + std::to_string(id) + ", which is not a Var");
    }
  }
  for (const auto& n : graph.nodes()) {
    const auto kind = n.op.kind();
    if (kind == OpKind::Var) {
      auto it = inputs.find(n.id);
      const Tensor* value = it != inputs.end() ? &it->second : graph.value(n.id) ? &*graph.value(n.id) : nullptr;
      if (!value) throw EvalError("missing input for Var '" + n.name + "' (node " + std::to_string(n.id) + ")");
      if (n.declared_shape && *n.declared_shape != value->shape()) {
        throw EvalError("input for Var '" + n.name + "' has shape " + value->shape().to_string() + ", expected " +
                        n.declared_shape->to_string());
      }
      leaves[n.id] = value;
    } else if (kind == OpKind::Const) {
      if (!graph.value(n.id)) throw EvalError("Const node " + std::to_string(n.id) + " has no value");
      leaves[n.id] = &*graph.value(n.id);
    }
  }
  return leaves;
}

std::vector<Shape> shapes_for(const Graph& graph, const std::vector<const Tensor*>& leaves) {
  std::map<NodeId, Shape> input_shapes;
  for (const auto& n : graph.nodes()) {
    if (n.op.kind() == OpKind::Var) input_shapes.emplace(n.id, leaves[n.id]->shape());
  }
  return infer_shapes(graph, input_shapes);
}

std::set<NodeId> result_nodes(const Graph& graph) {
  std::set<NodeId> ids(graph.outputs().begin(), graph.outputs().end());
  for (const auto& io : graph.iopairs()) ids.insert(io.source);
  return ids;
}

}  // namespace

std::map<NodeId, Tensor> evaluate(const Graph& graph, const AllocationPlan& plan, const InputMap& inputs,
                                  const EvalOptions& options) {
  const auto& delays = options.delays ? *options.delays : DelayRegistry::builtin();
  const auto leaves = bind_leaves(graph, inputs);
  const auto shapes = shapes_for(graph, leaves);
  const auto n = graph.size();
  if (plan.assignment.size() != n || plan.order.size() != n) throw EvalError("plan does not match graph");

  std::vector<std::vector<double>> blocks;
  blocks.reserve(plan.block_sizes.size());
  for (auto bytes : plan.block_sizes) {
    blocks.emplace_back(bytes / kElementBytes, options.poison_dead_values ? poison_value() : 0.0);
  }

  // Each node's storage: its external value, or the first numel elements of its block.
  std::vector<std::span<double>> views(n);
  std::vector<TensorRef> refs(n);
  for (const auto& node : graph.nodes()) {
    const auto id = node.id;
    if (leaves[id]) {
      refs[id] = TensorRef{leaves[id]->data(), &shapes[id]};
      continue;
    }
    if (!plan.assignment[id]) throw EvalError("node " + std::to_string(id) + " has no block");
    auto& block = blocks.at(*plan.assignment[id]);
    if (shapes[id].numel() > block.size()) throw EvalError("node " + std::to_string(id) + " overflows its block");
    views[id] = std::span<double>(block.data(), shapes[id].numel());
    refs[id] = TensorRef{views[id], &shapes[id]};
  }

  const auto keep = graph.keep_flags();
  std::vector<std::size_t> position(n);
  for (std::size_t r = 0; r < n; ++r) position[plan.order[r]] = r;
  std::vector<std::size_t> last_use(n, 0);
  for (const auto& node : graph.nodes()) {
    for (auto p : node.preds) last_use[p] = std::max(last_use[p], position[node.id]);
  }

  std::vector<bool> done(n, false);
  std::vector<TensorRef> operands;
  for (std::size_t r = 0; r < n; ++r) {
    const auto id = plan.order[r];
    const Node& node = graph.node(id);
    if (leaves[id]) {
      done[id] = true;
      continue;
    }
    operands.clear();
    for (auto p : node.preds) {
      if (!done[p]) throw EvalError("plan order evaluates node " + std::to_string(id) + " before its operand");
      if (options.poison_dead_values) {
        for (double v : refs[p].data) {
          if (is_poison(v)) {
            throw EvalError("node " + std::to_string(id) + " read a dead value through node " + std::to_string(p));
          }
        }
      }
      operands.push_back(refs[p]);
    }
    run_kernel(node.op, operands, MutableTensorRef{views[id], &shapes[id]}, delays);
    done[id] = true;

    if (options.poison_dead_values) {
      for (auto p : node.preds) {
        if (last_use[p] != r || keep[p] || leaves[p]) continue;
        if (plan.assignment[p] == plan.assignment[id]) continue;
        std::fill(views[p].begin(), views[p].end(), poison_value());
      }
    }
  }

  std::map<NodeId, Tensor> results;
  for (auto id : result_nodes(graph)) {
    results.emplace(id, Tensor(shapes[id], std::vector<double>(refs[id].data.begin(), refs[id].data.end())));
  }
  return results;
}

std::vector<Tensor> eager_evaluate(const Graph& graph, const InputMap& inputs, const DelayRegistry& delays) {
  const auto leaves = bind_leaves(graph, inputs);
  const auto shapes = shapes_for(graph, leaves);
  const auto order = topological_order(graph);

  std::vector<Tensor> values(graph.size());
  std::vector<TensorRef> operands;
  for (auto id : order.sequence) {
    const Node& node = graph.node(id);
    if (leaves[id]) {
      values[id] = *leaves[id];
      continue;
    }
    operands.clear();
    for (auto p : node.preds) operands.push_back(TensorRef{values[p].data(), &values[p].shape()});
    Tensor out = Tensor::filled(shapes[id], 0.0);
    run_kernel(node.op, operands, MutableTensorRef{out.data(), &shapes[id]}, delays);
    values[id] = std::move(out);
  }
  return values;
}

}  // namespace cgraph
