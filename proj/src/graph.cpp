#include "cgraph/graph.hpp"

#include <set>
#include <sstream>
#include <utility>

namespace cgraph {
namespace {

std::string describe(const Graph& graph, NodeId id) {
  std::string out = "node " + std::to_string(id);
  if (graph.contains(id)) out += " (" + std::string(op_name(graph.node(id).op.kind())) + ")";
  return out;
}

// Marks every node reachable backwards from `roots`. Ignores dangling ids.
std::vector<bool> reachable_from(const Graph& graph, const std::vector<NodeId>& roots) {
  std::vector<bool> seen(graph.size(), false);
  std::vector<NodeId> stack;
  for (auto r : roots) {
    if (graph.contains(r) && !seen[r]) {
      seen[r] = true;
      stack.push_back(r);
    }
  }
  while (!stack.empty()) {
    auto id = stack.back();
    stack.pop_back();
    for (auto p : graph.node(id).preds) {
      if (graph.contains(p) && !seen[p]) {
        seen[p] = true;
        stack.push_back(p);
      }
    }
  }
  return seen;
}

std::string dot_escape(const std::string& text) {
  std::string out;
  for (char c : text) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out;
}

std::vector<NodeId> traversal_roots(const Graph& graph) {
  std::vector<NodeId> roots = graph.outputs();
  for (const auto& io : graph.iopairs()) roots.push_back(io.source);
  return roots;
}

}  // namespace

Graph Graph::from_parts(std::vector<Node> nodes, std::vector<NodeId> inputs, std::vector<NodeId> outputs,
                        std::vector<IoPair> iopairs, std::vector<std::optional<Tensor>> values) {
  Graph g;
  g.values_ = std::move(values);
  g.values_.resize(nodes.size());
  g.nodes_ = std::move(nodes);
  g.inputs_ = std::move(inputs);
  g.outputs_ = std::move(outputs);
  g.iopairs_ = std::move(iopairs);
  return g;
}

void Graph::require_mutable(const char* what) const {
  if (frozen_) throw GraphError(std::string("graph is frozen: cannot ") + what);
}

NodeId Graph::add_node(Op op, std::vector<NodeId> preds, std::string name) {
  require_mutable("add nodes");
  if (preds.size() != op.arity()) {
    throw GraphError(std::string(op_name(op.kind())) + " takes " + std::to_string(op.arity()) +
                     " predecessors, got " + std::to_string(preds.size()));
  }
  for (auto p : preds) {
    if (!contains(p)) throw GraphError("unknown predecessor id " + std::to_string(p));
  }
  auto id = static_cast<NodeId>(nodes_.size());
  if (name.empty()) name = "n" + std::to_string(id);
  nodes_.push_back(Node{id, std::move(op), std::move(preds), std::move(name), std::nullopt});
  values_.emplace_back();
  return id;
}

NodeId Graph::add_var(Shape shape, std::string name) {
  auto id = add_node(Op(OpKind::Var), {}, std::move(name));
  nodes_[id].declared_shape = std::move(shape);
  return id;
}

NodeId Graph::add_const(Tensor value, std::string name) {
  auto id = add_node(Op(OpKind::Const), {}, std::move(name));
  values_[id] = std::move(value);
  return id;
}

void Graph::add_input(NodeId id) {
  require_mutable("add inputs");
  inputs_.push_back(id);
}

void Graph::add_output(NodeId id) {
  require_mutable("add outputs");
  outputs_.push_back(id);
}

void Graph::add_iopair(NodeId source, NodeId target) {
  require_mutable("add update edges");
  iopairs_.push_back({source, target});
}

void Graph::set_declared_shape(NodeId id, Shape shape) {
  require_mutable("declare shapes");
  nodes_.at(id).declared_shape = std::move(shape);
}

std::vector<bool> Graph::keep_flags() const {
  std::vector<bool> keep(nodes_.size(), false);
  for (const auto& n : nodes_) {
    auto k = n.op.kind();
    if (k == OpKind::Var || k == OpKind::Const) keep[n.id] = true;
  }
  for (auto o : outputs_) {
    if (contains(o)) keep[o] = true;
  }
  for (const auto& io : iopairs_) {
    if (contains(io.source)) keep[io.source] = true;
  }
  return keep;
}

std::vector<std::size_t> Graph::out_degrees() const {
  std::vector<std::size_t> deg(nodes_.size(), 0);
  for (const auto& n : nodes_) {
    for (auto p : n.preds) {
      if (contains(p)) ++deg[p];
    }
  }
  return deg;
}

void Graph::set_value(NodeId id, Tensor value) {
  const auto& n = nodes_.at(id);
  if (n.op.kind() == OpKind::Const) {
    require_mutable("change constants");
  } else if (n.op.kind() != OpKind::Var) {
    throw GraphError("only Var and Const nodes hold values, " + describe(*this, id) + " does not");
  }
  values_[id] = std::move(value);
}

std::vector<std::string> validate(const Graph& graph) {
  std::vector<std::string> violations;
  auto report = [&](const std::string& rule, NodeId id) { violations.push_back(rule + ": " + describe(graph, id)); };

  if (graph.outputs().empty()) violations.emplace_back("no outputs");

  for (std::size_t i = 0; i < graph.size(); ++i) {
    const auto& n = graph.nodes()[i];
    auto id = static_cast<NodeId>(i);
    if (n.id != id) report("node id out of sequence", id);
    if (n.preds.size() != n.op.arity()) report("arity mismatch", id);
    for (auto p : n.preds) {
      if (!graph.contains(p)) {
        report("unknown predecessor " + std::to_string(p), id);
      }
    }
    if (n.op.kind() == OpKind::Const && !graph.value(id)) report("Const without value", id);
  }

  {
    // Dangling edges were reported above and are skipped here. 0 = unvisited, 1 = on the DFS stack, 2 = finished
    std::vector<std::uint8_t> state(graph.size(), 0);
    for (NodeId start = 0; start < graph.size(); ++start) {
      if (state[start]) continue;
      std::vector<std::pair<NodeId, std::size_t>> stack{{start, 0}};
      state[start] = 1;
      while (!stack.empty()) {
        auto& [id, next] = stack.back();
        const auto& preds = graph.node(id).preds;
        if (next < preds.size()) {
          auto p = preds[next++];
          if (!graph.contains(p)) continue;
          if (state[p] == 1) {
            report("cycle", p);
          } else if (state[p] == 0) {
            state[p] = 1;
            stack.emplace_back(p, 0);
          }
        } else {
          state[id] = 2;
          stack.pop_back();
        }
      }
    }
  }

  for (auto in : graph.inputs()) {
    if (!graph.contains(in)) {
      report("unknown input", in);
    } else if (graph.node(in).op.kind() != OpKind::Var) {
      report("input not Var", in);
    }
  }
  for (auto out : graph.outputs()) {
    if (!graph.contains(out)) report("unknown output", out);
  }
  std::set<NodeId> targets;
  for (const auto& io : graph.iopairs()) {
    if (!graph.contains(io.source)) report("unknown update source", io.source);
    if (!graph.contains(io.target)) {
      report("unknown update target", io.target);
    } else if (graph.node(io.target).op.kind() != OpKind::Var) {
      report("update target not Var", io.target);
    } else if (!targets.insert(io.target).second) {
      report("duplicate update target", io.target);
    }
  }

  auto seen = reachable_from(graph, traversal_roots(graph));
  for (const auto& n : graph.nodes()) {
    if (!seen[n.id] && n.op.kind() != OpKind::Var) report("unreachable from outputs", n.id);
  }
  return violations;
}

Ordering topological_order(const Graph& graph) {
  Ordering ord;
  ord.sequence.reserve(graph.size());
  std::vector<std::uint8_t> state(graph.size(), 0);

  auto visit = [&](NodeId root) {
    if (!graph.contains(root)) throw GraphError("unknown root node " + std::to_string(root));
    if (state[root]) return;
    std::vector<std::pair<NodeId, std::size_t>> stack{{root, 0}};
    state[root] = 1;
    while (!stack.empty()) {
      auto& [id, next] = stack.back();
      const auto& preds = graph.node(id).preds;
      if (next < preds.size()) {
        auto p = preds[next++];
        if (!graph.contains(p)) throw GraphError("unknown predecessor " + std::to_string(p));
        if (state[p] == 1) throw GraphError("cycle detected at " + describe(graph, p));
        if (state[p] == 0) {
          state[p] = 1;
          stack.emplace_back(p, 0);
        }
      } else {
        state[id] = 2;
        ord.sequence.push_back(id);
        stack.pop_back();
      }
    }
  };

  for (auto root : traversal_roots(graph)) visit(root);
  for (NodeId id = 0; id < graph.size(); ++id) visit(id);

  ord.rank.assign(graph.size(), 0);
  for (std::size_t r = 0; r < ord.sequence.size(); ++r) ord.rank[ord.sequence[r]] = r;
  return ord;
}

void update_iopairs(Graph& graph, const std::map<NodeId, Tensor>& values) {
  // Check everything before writing so a failure leaves the graph untouched.
  for (const auto& io : graph.iopairs()) {
    auto it = values.find(io.source);
    if (it == values.end()) throw GraphError("update source has no value: " + describe(graph, io.source));
    const Node& target = graph.node(io.target);
    const auto& current = graph.value(io.target);
    const Shape* expected = current ? &current->shape() : target.declared_shape ? &*target.declared_shape : nullptr;
    if (expected && *expected != it->second.shape()) {
      throw GraphError("update shape mismatch: source " + describe(graph, io.source) + " has shape " +
                       it->second.shape().to_string() + ", target " + describe(graph, io.target) + " has " +
                       expected->to_string());
    }
  }
  for (const auto& io : graph.iopairs()) graph.set_value(io.target, values.at(io.source));
}

std::string to_dot(const Graph& graph) {
  std::vector<bool> is_output(graph.size(), false);
  for (auto o : graph.outputs()) {
    if (graph.contains(o)) is_output[o] = true;
  }

  std::ostringstream os;
  os << "digraph cgraph {\n  rankdir=LR;\n";
  for (const auto& n : graph.nodes()) {
    os << "  n" << n.id << " [label=\"#" << n.id << " " << op_name(n.op.kind());
    if (!n.name.empty() && n.name != "n" + std::to_string(n.id)) os << "\\n" << dot_escape(n.name);
    os << "\"";
    if (is_output[n.id]) {
      os << ", shape=doublecircle";
    } else if (n.op.kind() == OpKind::Var || n.op.kind() == OpKind::Const) {
      os << ", shape=box";
    }
    os << "];\n";
  }
  for (const auto& n : graph.nodes()) {
    for (auto p : n.preds) os << "  n" << p << " -> n" << n.id << ";\n";
  }
  for (const auto& io : graph.iopairs()) {
    os << "  n" << io.source << " -> n" << io.target << " [style=dashed];\n";
  }
  os << "}\n";
  return os.str();
}

}  // namespace cgraph
