#pragma once

#include <stdexcept>
#include <string>

#include "json.hpp"

#include "cgraph/evaluator.hpp"
#include "cgraph/graph.hpp"
#include "cgraph/planner.hpp"
#include "cgraph/tensor.hpp"

namespace cgraph {

using Json = nlohmann::json;

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// {"shape": [...], "data": [...]} with data flat and row-major. Non-finite
/// elements are written as the strings "nan", "inf" and "-inf".
Json tensor_to_json(const Tensor& tensor);
Tensor tensor_from_json(const Json& j);

/// Graph file: {"nodes": [{"id", "op", "params", "preds", "name", "value"?}],
/// "inputs", "outputs", "iopairs": [[source, target]], "shapes": {"id": dims}}.
/// Structure is taken as-is (validate() judges it); malformed JSON, unknown ops
/// and bad parameters raise ParseError.
Json graph_to_json(const Graph& graph);
Graph graph_from_json(const Json& j);

/// {"assignment": {"node": block}, "block_sizes", "external", "peak_bytes"}.
Json plan_to_json(const AllocationPlan& plan);

/// Inputs file: {"<Var name or id>": tensor}.
InputMap inputs_from_json(const Graph& graph, const Json& j);

/// Sorted keys, two-space indent, shortest round-trip floats, trailing newline.
std::string dump_canonical(const Json& j);

}  // namespace cgraph
