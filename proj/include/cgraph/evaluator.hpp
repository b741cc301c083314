#pragma once

#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "cgraph/graph.hpp"
#include "cgraph/planner.hpp"
#include "cgraph/tensor.hpp"

namespace cgraph {

class EvalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using DelayFn = std::function<Tensor(const Tensor&)>;

/// Host functions reachable from Delay nodes, keyed by name.
class DelayRegistry {
 public:
  void add(std::string name, DelayFn fn);
  const DelayFn* find(const std::string& name) const;

  /// tanh, relu, square, softplus: shape-preserving elementwise helpers.
  static const DelayRegistry& builtin();

 private:
  std::map<std::string, DelayFn> fns_;
};

struct TensorRef {
  std::span<const double> data;
  const Shape* shape;
};

struct MutableTensorRef {
  std::span<double> data;
  const Shape* shape;
};

/// Computes one op into `out`. Elementwise kernels tolerate `out` aliasing a
/// same-shaped operand; other kernels require disjoint storage.
void run_kernel(const Op& op, std::span<const TensorRef> operands, MutableTensorRef out,
                const DelayRegistry& delays = DelayRegistry::builtin());

using InputMap = std::map<NodeId, Tensor>;

struct EvalOptions {
  const DelayRegistry* delays = nullptr;  // builtin() when null
  /// Fill each view with a sentinel once its value is dead and fail on any
  /// later read of a sentinel.
  bool poison_dead_values = false;
};

/// Evaluates the graph with node storage carved from the plan's blocks.
///
/// Var values come from `inputs`, falling back to the graph's value slots.
/// Returns copies of every output and update-edge source value.
std::map<NodeId, Tensor> evaluate(const Graph& graph, const AllocationPlan& plan, const InputMap& inputs = {},
                                  const EvalOptions& options = {});

/// Reference semantics: every node gets private storage. Returns all node values by id.
std::vector<Tensor> eager_evaluate(const Graph& graph, const InputMap& inputs = {},
                                   const DelayRegistry& delays = DelayRegistry::builtin());

}  // namespace cgraph
