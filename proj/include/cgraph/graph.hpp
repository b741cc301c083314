#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cgraph/op.hpp"
#include "cgraph/tensor.hpp"

namespace cgraph {

using NodeId = std::uint32_t;

class GraphError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Node {
  NodeId id = 0;
  Op op{OpKind::Var};
  std::vector<NodeId> preds;  // ordered; duplicates allowed (x * x)
  std::string name;
  std::optional<Shape> declared_shape;  // Var inputs only
};

/// Update edge: after an evaluation, `target` (a Var) takes the value of `source`.
struct IoPair {
  NodeId source = 0;
  NodeId target = 0;
  bool operator==(const IoPair&) const = default;
};

/// Computation graph over dense node ids.
///
/// Nodes are appended with add_node, whose predecessors must already exist, so
/// creation order is a topological order. from_parts admits arbitrary (possibly
/// broken) structures so that validate() and to_dot() can inspect them.
/// After freeze() the structure is immutable; only Var value slots can change.
class Graph {
 public:
  Graph() = default;

  static Graph from_parts(std::vector<Node> nodes, std::vector<NodeId> inputs, std::vector<NodeId> outputs,
                          std::vector<IoPair> iopairs, std::vector<std::optional<Tensor>> values = {});

  /// Throws GraphError on arity mismatch, unknown predecessor or a frozen graph.
  NodeId add_node(Op op, std::vector<NodeId> preds, std::string name = {});

  NodeId add_var(Shape shape, std::string name = {});
  NodeId add_const(Tensor value, std::string name = {});

  void add_input(NodeId id);
  void add_output(NodeId id);
  void add_iopair(NodeId source, NodeId target);
  void set_declared_shape(NodeId id, Shape shape);

  void freeze() noexcept { frozen_ = true; }
  bool frozen() const noexcept { return frozen_; }

  std::size_t size() const noexcept { return nodes_.size(); }
  bool contains(NodeId id) const noexcept { return id < nodes_.size(); }
  const Node& node(NodeId id) const { return nodes_.at(id); }
  const std::vector<Node>& nodes() const noexcept { return nodes_; }
  const std::vector<NodeId>& inputs() const noexcept { return inputs_; }
  const std::vector<NodeId>& outputs() const noexcept { return outputs_; }
  const std::vector<IoPair>& iopairs() const noexcept { return iopairs_; }

  /// Nodes whose memory must never be handed to another node: Var, Const,
  /// outputs and update-edge sources.
  std::vector<bool> keep_flags() const;

  /// Number of consuming edges per node, counted with multiplicity.
  std::vector<std::size_t> out_degrees() const;

  const std::optional<Tensor>& value(NodeId id) const { return values_.at(id); }
  const std::vector<std::optional<Tensor>>& values() const noexcept { return values_; }

  /// Var slots may be written at any time; Const slots only before freeze().
  void set_value(NodeId id, Tensor value);

 private:
  void require_mutable(const char* what) const;

  std::vector<Node> nodes_;
  std::vector<NodeId> inputs_;
  std::vector<NodeId> outputs_;
  std::vector<IoPair> iopairs_;
  std::vector<std::optional<Tensor>> values_;
  bool frozen_ = false;
};

/// Every broken structural invariant, as human-readable messages. Empty means valid.
std::vector<std::string> validate(const Graph& graph);

struct Ordering {
  std::vector<NodeId> sequence;  // evaluation order
  std::vector<std::size_t> rank;  // rank[id] = position in sequence
};

/// Post-order DFS from the outputs (declaration order, predecessors left to
/// right), then from update-edge sources, then any remaining node by id.
/// Throws GraphError on a cycle or dangling predecessor.
Ordering topological_order(const Graph& graph);

/// Copies each update-edge source value into its target Var slot.
/// Throws GraphError when a source value is missing or its shape differs from the target's.
void update_iopairs(Graph& graph, const std::map<NodeId, Tensor>& values);

/// Graphviz rendering. Update edges are dashed. Tolerates invalid graphs.
std::string to_dot(const Graph& graph);

}  // namespace cgraph
