#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cgraph/graph.hpp"

namespace cgraph {

/// What a rewrite did. The output graph has
/// `input size - nodes_removed - nodes_fused` nodes.
struct RewriteReport {
  std::string pass;
  std::size_t nodes_removed = 0;     // pruned, not absorbed by a fusion
  std::size_t nodes_fused = 0;       // absorbed into a fused node
  std::size_t constants_folded = 0;  // non-Const nodes evaluated at build time
  std::size_t fusions = 0;           // fused nodes created
  std::size_t identities = 0;        // algebraic identities applied
  std::size_t rounds = 0;            // optimise() only: pipeline rounds until the fixpoint

  bool changed() const noexcept {
    return nodes_removed + nodes_fused + constants_folded + fusions + identities > 0;
  }
  RewriteReport& operator+=(const RewriteReport& other);
};

struct RewriteResult {
  Graph graph;
  RewriteReport report;
  /// Old node id -> the node computing the same value in `graph`, when it survives.
  std::vector<std::optional<NodeId>> remap;
};

/// Raised when a constant subgraph cannot be evaluated to finite values.
class FoldError : public std::runtime_error {
 public:
  FoldError(NodeId node, const std::string& what) : std::runtime_error(what), node_(node) {}
  NodeId node() const noexcept { return node_; }

 private:
  NodeId node_;
};

/// Replaces every maximal Const-only subgraph with one Const holding its value. Delay is never folded.
RewriteResult fold_constants(const Graph& graph);

/// Add(Mul(a, b), c) and Add(c, Mul(a, b)) -> FMA(a, b, c) when the Mul has a
/// single consumer and is neither an output nor an update source.
RewriteResult fuse_fma(const Graph& graph);

/// lr * g / (sqrt(s) + eps) -> FusedAdagrad(lr, eps)(g, s).
///
/// The scaling may be ScalarMul(lr) or a Mul by a one-element Const; the offset
/// may be ScalarAdd(eps) or an Add of a one-element Const. Interior nodes must
/// have one consumer and not be outputs or update sources.
RewriteResult fuse_adagrad(const Graph& graph);

/// x+0, 0+x, x-0, x*1, 1*x, x/1 -> x; x*0 -> zeros; a Repeat of a unit axis
/// feeding a broadcasting op is bypassed. Applied to a fixpoint.
RewriteResult simplify_identities(const Graph& graph);

/// Runs identities, folding, AdaGrad fusion and FMA fusion until no pass changes anything.
RewriteResult optimise(const Graph& graph);

}  // namespace cgraph
