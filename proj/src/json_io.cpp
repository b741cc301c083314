#include "cgraph/json_io.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cgraph {
namespace {

Json number_to_json(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

double number_from_json(const Json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
  }
  throw ParseError("expected a number, got " + j.dump());
}

Shape shape_from_json(const Json& j) {
  if (!j.is_array()) throw ParseError("shape must be an array, got " + j.dump());
  std::vector<std::int64_t> dims;
  for (const auto& d : j) {
    if (!d.is_number_integer()) throw ParseError("shape extents must be integers, got " + d.dump());
    dims.push_back(d.get<std::int64_t>());
  }
  try {
    return Shape(std::move(dims));
  } catch (const ShapeError& e) {
    throw ParseError(e.what());
  }
}

Json params_to_json(const Op& op) {
  Json p = Json::object();
  switch (op.kind()) {
    case OpKind::Sum: {
      const auto& axis = op.params<SumParams>().axis;
      p["axis"] = axis ? Json(*axis) : Json(nullptr);
      break;
    }
    case OpKind::Reshape:
      p["target"] = op.params<ReshapeParams>().target.dims();
      break;
    case OpKind::Repeat:
      p["axis"] = op.params<RepeatParams>().axis;
      p["count"] = op.params<RepeatParams>().count;
      break;
    case OpKind::ScalarAdd:
    case OpKind::ScalarMul:
      p["value"] = number_to_json(op.params<ScalarParams>().value);
      break;
    case OpKind::FusedAdagrad:
      p["lr"] = op.params<AdagradParams>().lr;
      p["eps"] = op.params<AdagradParams>().eps;
      break;
    case OpKind::Delay:
      p["fn"] = op.params<DelayParams>().fn;
      p["shape"] = op.params<DelayParams>().out_shape.dims();
      break;
    default:
      break;
  }
  return p;
}

const Json& field(const Json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(std::string("missing field '") + key + "' in " + obj.dump());
  return *it;
}

Op op_from_json(const std::string& name, const Json& params) {
  auto kind = op_kind_from_name(name);
  if (!kind) throw ParseError("unknown op '" + name + "'");
  try {
    switch (*kind) {
      case OpKind::Sum: {
        auto it = params.find("axis");
        if (it == params.end() || it->is_null()) return Op::sum();
        return Op::sum(it->get<int>());
      }
      case OpKind::Reshape:
        return Op::reshape(shape_from_json(field(params, "target")));
      case OpKind::Repeat:
        return Op::repeat(field(params, "axis").get<int>(), field(params, "count").get<int>());
      case OpKind::ScalarAdd:
        return Op::scalar_add(number_from_json(field(params, "value")));
      case OpKind::ScalarMul:
        return Op::scalar_mul(number_from_json(field(params, "value")));
      case OpKind::FusedAdagrad:
        return Op::fused_adagrad(field(params, "lr").get<double>(), field(params, "eps").get<double>());
      case OpKind::Delay:
        return Op::delay(field(params, "fn").get<std::string>(), shape_from_json(field(params, "shape")));
      default:
        return Op(*kind);
    }
  } catch (const std::invalid_argument& e) {
    throw ParseError(name + ": " + e.what());
  } catch (const Json::exception& e) {
    throw ParseError(name + " parameters: " + e.what());
  }
}

NodeId id_from_json(const Json& j) {
  if (!j.is_number_integer() || j.get<std::int64_t>() < 0) throw ParseError("node ids are non-negative integers");
  return j.get<NodeId>();
}

std::vector<NodeId> ids_from_json(const Json& j) {
  if (!j.is_array()) throw ParseError("expected an array of node ids, got " + j.dump());
  std::vector<NodeId> ids;
  for (const auto& x : j) ids.push_back(id_from_json(x));
  return ids;
}

}  // namespace

Json tensor_to_json(const Tensor& tensor) {
  Json data = Json::array();
  for (double v : tensor.data()) data.push_back(number_to_json(v));
  return Json{{"shape", tensor.shape().dims()}, {"data", std::move(data)}};
}

Tensor tensor_from_json(const Json& j) {
  if (!j.is_object()) throw ParseError("tensor literal must be an object, got " + j.dump());
  auto shape = shape_from_json(field(j, "shape"));
  const auto& data = field(j, "data");
  if (!data.is_array()) throw ParseError("tensor data must be an array");
  std::vector<double> values;
  values.reserve(data.size());
  for (const auto& v : data) values.push_back(number_from_json(v));
  try {
    return Tensor(std::move(shape), std::move(values));
  } catch (const ShapeError& e) {
    throw ParseError(e.what());
  }
}

Json graph_to_json(const Graph& graph) {
  Json nodes = Json::array();
  Json shapes = Json::object();
  for (const auto& n : graph.nodes()) {
    Json node{{"id", n.id},
              {"op", op_name(n.op.kind())},
              {"params", params_to_json(n.op)},
              {"preds", n.preds},
              {"name", n.name}};
    if (const auto& v = graph.value(n.id)) node["value"] = tensor_to_json(*v);
    if (n.declared_shape) shapes[std::to_string(n.id)] = n.declared_shape->dims();
    nodes.push_back(std::move(node));
  }
  Json iopairs = Json::array();
  for (const auto& io : graph.iopairs()) iopairs.push_back({io.source, io.target});
  return Json{{"nodes", std::move(nodes)},
              {"inputs", graph.inputs()},
              {"outputs", graph.outputs()},
              {"iopairs", std::move(iopairs)},
              {"shapes", std::move(shapes)}};
}

Graph graph_from_json(const Json& j) {
  if (!j.is_object()) throw ParseError("graph file must be a JSON object");
  const auto& jnodes = field(j, "nodes");
  if (!jnodes.is_array()) throw ParseError("'nodes' must be an array");

  std::vector<Node> nodes;
  std::vector<std::optional<Tensor>> values;
  for (const auto& jn : jnodes) {
    if (!jn.is_object()) throw ParseError("node entries must be objects");
    Node n;
    n.id = id_from_json(field(jn, "id"));
    auto params_it = jn.find("params");
    n.op = op_from_json(field(jn, "op").get<std::string>(), params_it == jn.end() ? Json::object() : *params_it);
    if (auto it = jn.find("preds"); it != jn.end()) n.preds = ids_from_json(*it);
    if (auto it = jn.find("name"); it != jn.end()) n.name = it->get<std::string>();
    if (n.name.empty()) n.name = "n" + std::to_string(n.id);
    nodes.push_back(std::move(n));
    auto vit = jn.find("value");
    values.push_back(vit == jn.end() ? std::nullopt : std::optional<Tensor>(tensor_from_json(*vit)));
  }

  // Accept nodes in any order, but ids must be exactly 0..n-1.
  std::vector<std::size_t> perm(nodes.size());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  std::sort(perm.begin(), perm.end(), [&](auto a, auto b) { return nodes[a].id < nodes[b].id; });
  std::vector<Node> sorted;
  std::vector<std::optional<Tensor>> sorted_values;
  for (std::size_t i = 0; i < perm.size(); ++i) {
    if (nodes[perm[i]].id != i) throw ParseError("node ids must be dense 0..n-1; missing or repeated id " + std::to_string(i));
    sorted.push_back(std::move(nodes[perm[i]]));
    sorted_values.push_back(std::move(values[perm[i]]));
  }

  if (auto it = j.find("shapes"); it != j.end()) {
    if (!it->is_object()) throw ParseError("'shapes' must map node ids to dimension arrays");
    for (const auto& [key, dims] : it->items()) {
      std::size_t id = 0;
      try {
        std::size_t used = 0;
        id = std::stoul(key, &used);
        if (used != key.size()) throw std::invalid_argument(key);
      } catch (const std::exception&) {
        throw ParseError("'shapes' key '" + key + "' is not a node id");
      }
      if (id >= sorted.size()) throw ParseError("'shapes' names unknown node " + key);
      sorted[id].declared_shape = shape_from_json(dims);
    }
  }

  std::vector<IoPair> iopairs;
  if (auto it = j.find("iopairs"); it != j.end()) {
    for (const auto& pair : *it) {
      if (!pair.is_array() || pair.size() != 2) throw ParseError("iopairs entries are [source, target]");
      iopairs.push_back({id_from_json(pair[0]), id_from_json(pair[1])});
    }
  }
  auto optional_ids = [&](const char* key) {
    auto it = j.find(key);
    return it == j.end() ? std::vector<NodeId>{} : ids_from_json(*it);
  };
  return Graph::from_parts(std::move(sorted), optional_ids("inputs"), optional_ids("outputs"), std::move(iopairs),
                           std::move(sorted_values));
}

Json plan_to_json(const AllocationPlan& plan) {
  Json assignment = Json::object();
  for (std::size_t id = 0; id < plan.assignment.size(); ++id) {
    if (plan.assignment[id]) assignment[std::to_string(id)] = *plan.assignment[id];
  }
  return Json{{"assignment", std::move(assignment)},
              {"block_sizes", plan.block_sizes},
              {"external", plan.external},
              {"peak_bytes", plan.peak_bytes}};
}

InputMap inputs_from_json(const Graph& graph, const Json& j) {
  if (!j.is_object()) throw ParseError("inputs file must be an object of tensor literals");
  InputMap inputs;
  for (const auto& [key, literal] : j.items()) {
    std::optional<NodeId> id;
    for (const auto& n : graph.nodes()) {
      if (n.name == key && n.op.kind() == OpKind::Var) {
        id = n.id;
        break;
      }
    }
    if (!id && !key.empty() && std::all_of(key.begin(), key.end(), [](char c) { return c >= '0' && c <= '9'; })) {
      id = static_cast<NodeId>(std::stoul(key));
    }
    if (!id) throw ParseError("inputs name unknown Var '" + key + "'");
    inputs[*id] = tensor_from_json(literal);
  }
  return inputs;
}

std::string dump_canonical(const Json& j) { return j.dump(2) + "\n"; }

}  // namespace cgraph
