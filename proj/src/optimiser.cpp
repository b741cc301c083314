#include "cgraph/optimiser.hpp"

#include <algorithm>
#include <cmath>

#include "cgraph/evaluator.hpp"
#include "cgraph/shape_infer.hpp"

namespace cgraph {

RewriteReport& RewriteReport::operator+=(const RewriteReport& other) {
  nodes_removed += other.nodes_removed;
  nodes_fused += other.nodes_fused;
  constants_folded += other.constants_folded;
  fusions += other.fusions;
  identities += other.identities;
  return *this;
}

namespace {

bool ids_are_topological(const Graph& g) {
  for (const auto& n : g.nodes()) {
    for (auto p : n.preds) {
      if (p >= n.id) return false;
    }
  }
  return true;
}

// Mutable copy of a graph for one rewrite pass. Nodes keep their ids while the
// pass runs; replaced nodes forward to their replacement and consumers see the
// replacement through preds(). finish() prunes and renumbers.
class Draft {
 public:
  explicit Draft(const Graph& g)
      : source_(g),
        nodes_(g.nodes()),
        values_(g.values()),
        shapes_(infer_shapes(g)),
        uses_(g.out_degrees()),
        pinned_(g.size(), false),
        forward_(g.size()) {
    if (ids_are_topological(g)) {
      order_.resize(g.size());
      for (NodeId i = 0; i < g.size(); ++i) order_[i] = i;
    } else {
      order_ = topological_order(g).sequence;
    }
    for (auto o : g.outputs()) pinned_[o] = true;
    for (const auto& io : g.iopairs()) pinned_[io.source] = true;
    for (NodeId i = 0; i < g.size(); ++i) forward_[i] = i;
  }

  const std::vector<NodeId>& order() const { return order_; }
  const Node& node(NodeId id) const { return nodes_[id]; }
  OpKind kind(NodeId id) const { return nodes_[id].op.kind(); }
  const Shape& shape(NodeId id) const { return shapes_[id]; }
  const std::optional<Tensor>& value(NodeId id) const { return values_[id]; }
  std::size_t uses(NodeId id) const { return uses_[id]; }
  bool pinned(NodeId id) const { return pinned_[id]; }
  bool live(NodeId id) const { return forward_[id] == id; }

  /// Output or update source, Var or Const.
  bool keep(NodeId id) const { return pinned_[id] || kind(id) == OpKind::Var || kind(id) == OpKind::Const; }

  NodeId resolve(NodeId id) const {
    while (forward_[id] != id) id = forward_[id];
    return id;
  }

  std::vector<NodeId> preds(NodeId id) const {
    auto p = nodes_[id].preds;
    for (auto& x : p) x = resolve(x);
    return p;
  }

  /// Every consumer of `from` now reads `to`.
  void redirect(NodeId from, NodeId to) {
    for (auto p : preds(from)) --uses_[p];
    uses_[to] += uses_[from];
    uses_[from] = 0;
    pinned_[to] = pinned_[to] || pinned_[from];
    forward_[from] = to;
  }

  void set_node(NodeId id, Op op, std::vector<NodeId> preds) {
    for (auto p : this->preds(id)) --uses_[p];
    for (auto p : preds) ++uses_[p];
    nodes_[id].op = std::move(op);
    nodes_[id].preds = std::move(preds);
  }

  void make_const(NodeId id, Tensor value) {
    set_node(id, Op(OpKind::Const), {});
    values_[id] = std::move(value);
  }

  RewriteResult finish(RewriteReport report) const {
    const auto n = nodes_.size();
    std::vector<bool> alive(n, false);
    std::vector<NodeId> stack;
    auto mark = [&](NodeId id) {
      id = resolve(id);
      if (!alive[id]) {
        alive[id] = true;
        stack.push_back(id);
      }
    };
    for (auto o : source_.outputs()) mark(o);
    for (const auto& io : source_.iopairs()) mark(io.source);
    for (NodeId id = 0; id < n; ++id) {
      if (live(id) && kind(id) == OpKind::Var) mark(id);
    }
    while (!stack.empty()) {
      auto id = stack.back();
      stack.pop_back();
      for (auto p : preds(id)) mark(p);
    }

    RewriteResult out;
    std::vector<std::optional<NodeId>> fresh(n);
    for (auto id : order_) {
      if (!alive[id]) continue;
      const Node& node = nodes_[id];
      auto operands = preds(id);
      for (auto& p : operands) p = *fresh[p];
      NodeId nid;
      if (kind(id) == OpKind::Const) {
        nid = out.graph.add_const(*values_[id], node.name);
      } else {
        nid = out.graph.add_node(node.op, std::move(operands), node.name);
        if (node.declared_shape) out.graph.set_declared_shape(nid, *node.declared_shape);
        if (kind(id) == OpKind::Var && values_[id]) out.graph.set_value(nid, *values_[id]);
      }
      fresh[id] = nid;
    }
    for (auto in : source_.inputs()) {
      if (auto r = fresh[resolve(in)]) out.graph.add_input(*r);
    }
    for (auto o : source_.outputs()) out.graph.add_output(*fresh[resolve(o)]);
    for (const auto& io : source_.iopairs()) out.graph.add_iopair(*fresh[resolve(io.source)], *fresh[io.target]);
    if (source_.frozen()) out.graph.freeze();

    out.remap.resize(n);
    for (NodeId id = 0; id < n; ++id) out.remap[id] = fresh[resolve(id)];

    const auto shrink = n - out.graph.size();
    report.nodes_removed = shrink - std::min(shrink, report.nodes_fused);
    out.report = std::move(report);
    return out;
  }

 private:
  const Graph& source_;
  std::vector<Node> nodes_;
  std::vector<std::optional<Tensor>> values_;
  std::vector<Shape> shapes_;
  std::vector<std::size_t> uses_;
  std::vector<bool> pinned_;
  std::vector<NodeId> forward_;
  std::vector<NodeId> order_;
};

bool is_filled_const(const Draft& d, NodeId id, double v) {
  if (d.kind(id) != OpKind::Const || !d.value(id)) return false;
  const auto data = d.value(id)->data();
  return std::all_of(data.begin(), data.end(), [v](double x) { return x == v; });
}

std::optional<double> scalar_const(const Draft& d, NodeId id) {
  if (d.kind(id) != OpKind::Const || !d.value(id) || d.value(id)->numel() != 1) return std::nullopt;
  return (*d.value(id))[0];
}

// One sweep of identity rewrites. Returns the number applied.
std::size_t identity_sweep(Draft& d) {
  std::size_t applied = 0;
  for (auto id : d.order()) {
    if (!d.live(id)) continue;
    const auto kind = d.kind(id);
    if (kind == OpKind::Var || kind == OpKind::Const) continue;
    const auto p = d.preds(id);
    const auto& out = d.shape(id);

    std::optional<NodeId> same;
    switch (kind) {
      case OpKind::Add:
        if (is_filled_const(d, p[1], 0.0) && d.shape(p[0]) == out) {
          same = p[0];
        } else if (is_filled_const(d, p[0], 0.0) && d.shape(p[1]) == out) {
          same = p[1];
        }
        break;
      case OpKind::Sub:
        if (is_filled_const(d, p[1], 0.0) && d.shape(p[0]) == out) same = p[0];
        break;
      case OpKind::Mul:
        if (is_filled_const(d, p[1], 1.0) && d.shape(p[0]) == out) {
          same = p[0];
        } else if (is_filled_const(d, p[0], 1.0) && d.shape(p[1]) == out) {
          same = p[1];
        } else if (is_filled_const(d, p[0], 0.0) || is_filled_const(d, p[1], 0.0)) {
          d.make_const(id, Tensor::filled(out, 0.0));
          ++applied;
          continue;
        }
        break;
      case OpKind::Div:
        if (is_filled_const(d, p[1], 1.0) && d.shape(p[0]) == out) same = p[0];
        break;
      default:
        break;
    }
    if (same) {
      d.redirect(id, *same);
      ++applied;
      continue;
    }

    if (!is_broadcasting_elementwise(kind)) continue;
    auto operands = p;
    bool bypassed = false;
    for (auto& operand : operands) {
      if (d.kind(operand) != OpKind::Repeat) continue;
      const auto axis = static_cast<std::size_t>(d.node(operand).op.params<RepeatParams>().axis);
      const NodeId inner = d.preds(operand)[0];
      if (d.shape(inner)[axis] != 1) continue;
      const NodeId saved = operand;
      operand = inner;
      Shape result = d.shape(operands[0]);
      for (std::size_t i = 1; i < operands.size(); ++i) {
        try {
          result = broadcast_shape(result, d.shape(operands[i]));
        } catch (const ShapeError&) {
          result = Shape{};
        }
      }
      if (result == out) {
        bypassed = true;
      } else {
        operand = saved;
      }
    }
    if (bypassed) {
      d.set_node(id, d.node(id).op, operands);
      ++applied;
    }
  }
  return applied;
}

}  // namespace

RewriteResult simplify_identities(const Graph& graph) {
  Draft d(graph);
  RewriteReport report{.pass = "simplify_identities"};
  while (auto applied = identity_sweep(d)) report.identities += applied;
  return d.finish(std::move(report));
}

RewriteResult fold_constants(const Graph& graph) {
  Draft d(graph);
  RewriteReport report{.pass = "fold_constants"};
  const auto n = graph.size();

  std::vector<bool> constant(n, false);
  std::vector<std::optional<Tensor>> folded(n);
  std::vector<TensorRef> operands;
  for (auto id : d.order()) {
    const auto kind = d.kind(id);
    if (kind == OpKind::Const) {
      constant[id] = true;
      continue;
    }
    if (kind == OpKind::Var || kind == OpKind::Delay) continue;
    const auto& preds = d.node(id).preds;
    if (!std::all_of(preds.begin(), preds.end(), [&](NodeId p) { return constant[p]; })) continue;

    operands.clear();
    bool finite_inputs = true;
    for (auto p : preds) {
      const Tensor& v = d.kind(p) == OpKind::Const ? *d.value(p) : *folded[p];
      for (double x : v.data()) finite_inputs = finite_inputs && std::isfinite(x);
      operands.push_back(TensorRef{v.data(), &v.shape()});
    }
    Tensor result = Tensor::filled(d.shape(id), 0.0);
    run_kernel(d.node(id).op, operands, MutableTensorRef{result.data(), &d.shape(id)});
    if (finite_inputs) {
      for (double x : result.data()) {
        if (!std::isfinite(x)) {
          throw FoldError(id, "constant folding produced a non-finite value at node " + std::to_string(id) + " (" +
                                  std::string(op_name(kind)) + ")");
        }
      }
    }
    constant[id] = true;
    folded[id] = std::move(result);
    ++report.constants_folded;
  }

  // Materialise folded values that something outside the constant region still reads.
  std::vector<bool> needed(n, false);
  for (auto id : d.order()) {
    if (d.pinned(id)) needed[id] = true;
    if (constant[id]) continue;
    for (auto p : d.node(id).preds) needed[p] = true;
  }
  for (auto id : d.order()) {
    if (folded[id] && needed[id]) d.make_const(id, std::move(*folded[id]));
  }
  return d.finish(std::move(report));
}

RewriteResult fuse_fma(const Graph& graph) {
  Draft d(graph);
  RewriteReport report{.pass = "fuse_fma"};
  for (auto id : d.order()) {
    if (d.kind(id) != OpKind::Add) continue;
    const auto p = d.preds(id);
    for (std::size_t slot = 0; slot < 2; ++slot) {
      const NodeId mul = p[slot];
      if (d.kind(mul) != OpKind::Mul || d.uses(mul) != 1 || d.keep(mul)) continue;
      auto factors = d.preds(mul);
      d.set_node(id, Op(OpKind::FMA), {factors[0], factors[1], p[1 - slot]});
      ++report.fusions;
      ++report.nodes_fused;
      break;
    }
  }
  return d.finish(std::move(report));
}

namespace {

struct ScaledOperand {
  double factor;
  NodeId operand;
  std::optional<NodeId> const_leaf;
};

// node == factor * operand, as ScalarMul or a Mul by a one-element Const.
std::optional<ScaledOperand> match_scale(const Draft& d, NodeId node) {
  if (d.kind(node) == OpKind::ScalarMul) {
    return ScaledOperand{d.node(node).op.params<ScalarParams>().value, d.preds(node)[0], std::nullopt};
  }
  if (d.kind(node) != OpKind::Mul) return std::nullopt;
  const auto p = d.preds(node);
  for (std::size_t slot = 0; slot < 2; ++slot) {
    if (auto c = scalar_const(d, p[slot]); c && d.shape(p[1 - slot]) == d.shape(node)) {
      return ScaledOperand{*c, p[1 - slot], p[slot]};
    }
  }
  return std::nullopt;
}

// node == operand + offset, as ScalarAdd or an Add of a one-element Const.
std::optional<ScaledOperand> match_offset(const Draft& d, NodeId node) {
  if (d.kind(node) == OpKind::ScalarAdd) {
    return ScaledOperand{d.node(node).op.params<ScalarParams>().value, d.preds(node)[0], std::nullopt};
  }
  if (d.kind(node) != OpKind::Add) return std::nullopt;
  const auto p = d.preds(node);
  for (std::size_t slot = 0; slot < 2; ++slot) {
    if (auto c = scalar_const(d, p[slot]); c && d.shape(p[1 - slot]) == d.shape(node)) {
      return ScaledOperand{*c, p[1 - slot], p[slot]};
    }
  }
  return std::nullopt;
}

}  // namespace

RewriteResult fuse_adagrad(const Graph& graph) {
  Draft d(graph);
  RewriteReport report{.pass = "fuse_adagrad"};
  auto interior_ok = [&](NodeId id) { return d.uses(id) == 1 && !d.keep(id); };

  for (auto id : d.order()) {
    if (d.kind(id) != OpKind::Div) continue;
    const auto p = d.preds(id);
    const NodeId numerator = p[0], denominator = p[1];
    auto scale = match_scale(d, numerator);
    auto offset = match_offset(d, denominator);
    if (!scale || !offset) continue;
    const NodeId root = offset->operand;
    if (d.kind(root) != OpKind::Sqrt) continue;
    if (!interior_ok(numerator) || !interior_ok(denominator) || !interior_ok(root)) continue;
    if (!(offset->factor > 0.0) || !std::isfinite(offset->factor) || !std::isfinite(scale->factor)) continue;

    const NodeId grad = scale->operand;
    const NodeId accum = d.preds(root)[0];
    if (d.shape(id) != d.shape(grad)) continue;
    try {
      if (broadcast_shape(d.shape(grad), d.shape(accum)) != d.shape(grad)) continue;
    } catch (const ShapeError&) {
      continue;
    }

    d.set_node(id, Op::fused_adagrad(scale->factor, offset->factor), {grad, accum});
    ++report.fusions;
    report.nodes_fused += 3;
    for (const auto& leaf : {scale->const_leaf, offset->const_leaf}) {
      if (leaf && d.uses(*leaf) == 0 && !d.pinned(*leaf)) ++report.nodes_fused;
    }
  }
  return d.finish(std::move(report));
}

namespace {

void compose(std::vector<std::optional<NodeId>>& total, const std::vector<std::optional<NodeId>>& step) {
  for (auto& t : total) {
    if (t) t = step[*t];
  }
}

}  // namespace

RewriteResult optimise(const Graph& graph) {
  using Pass = RewriteResult (*)(const Graph&);
  constexpr Pass kPipeline[] = {simplify_identities, fold_constants, fuse_adagrad, fuse_fma};
  constexpr std::size_t kMaxRounds = 64;

  RewriteResult result;
  result.graph = graph;
  result.report.pass = "optimise";
  result.remap.resize(graph.size());
  for (NodeId i = 0; i < graph.size(); ++i) result.remap[i] = i;

  for (std::size_t round = 0; round < kMaxRounds; ++round) {
    bool changed = false;
    for (auto pass : kPipeline) {
      auto step = pass(result.graph);
      changed = changed || step.report.changed();
      result.report += step.report;
      compose(result.remap, step.remap);
      result.graph = std::move(step.graph);
    }
    ++result.report.rounds;
    if (!changed) return result;
  }
  throw GraphError("optimiser did not reach a fixpoint in " + std::to_string(kMaxRounds) + " rounds");
}

}  // namespace cgraph
