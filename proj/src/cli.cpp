#include "cgraph/cli.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "cgraph/evaluator.hpp"
#include "cgraph/json_io.hpp"
#include "cgraph/optimiser.hpp"
#include "cgraph/pebble.hpp"
#include "cgraph/planner.hpp"
#include "cgraph/random_graph.hpp"
#include "cgraph/shape_infer.hpp"

namespace cgraph {
namespace {

/// A failure the user must fix on the command line or in an input file.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A well-formed request the graph cannot satisfy.
class ViolationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Flags {
  std::string graph;
  std::string out;
  std::string inputs;
  std::string dot;
  bool frontier = false;
  std::optional<std::size_t> space_budget;
  std::optional<std::uint64_t> seed;
  std::size_t nodes = 40;
  std::size_t rounds = 1;
};

Json read_json(const std::string& path, std::istream& in) {
  try {
    if (path == "-") return Json::parse(in);
    std::ifstream file(path);
    if (!file) throw UsageError("cannot open '" + path + "'");
    return Json::parse(file);
  } catch (const Json::parse_error& e) {
    throw UsageError((path == "-" ? std::string("<stdin>") : path) + ": " + e.what());
  }
}

void write_text(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
    return;
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw UsageError("cannot write '" + path + "'");
  file << text;
}

Graph load_graph(const Flags& flags, std::istream& in) {
  if (flags.seed) {
    RandomGraphOptions options;
    options.nodes = flags.nodes;
    return random_graph(*flags.seed, options);
  }
  if (flags.graph.empty()) throw UsageError("a graph file (or --seed) is required");
  try {
    return graph_from_json(read_json(flags.graph, in));
  } catch (const ParseError& e) {
    throw UsageError(flags.graph + ": " + e.what());
  }
}

/// Loads the graph and insists that it is structurally valid.
Graph load_valid_graph(const Flags& flags, std::istream& in) {
  auto graph = load_graph(flags, in);
  auto violations = validate(graph);
  if (!violations.empty()) throw ViolationError("invalid graph: " + violations.front());
  return graph;
}

class Table {
 public:
  explicit Table(std::vector<std::string> header) { rows_.push_back(std::move(header)); }

  template <class... Cells>
  void row(const Cells&... cells) {
    std::vector<std::string> r;
    (r.push_back(cell(cells)), ...);
    rows_.push_back(std::move(r));
  }

  void print(std::ostream& os) const {
    std::vector<std::size_t> width;
    for (const auto& r : rows_) {
      width.resize(std::max(width.size(), r.size()), 0);
      for (std::size_t i = 0; i < r.size(); ++i) width[i] = std::max(width[i], r[i].size());
    }
    for (const auto& r : rows_) {
      std::string line;
      for (std::size_t i = 0; i < r.size(); ++i) {
        line += r[i];
        if (i + 1 < r.size()) line += std::string(width[i] - r[i].size() + 2, ' ');
      }
      os << line << '\n';
    }
  }

 private:
  static std::string cell(const std::string& s) { return s; }
  static std::string cell(const char* s) { return s; }
  template <class T>
  static std::string cell(const T& v) {
    std::ostringstream os;
    os << v;
    return os.str();
  }

  std::vector<std::vector<std::string>> rows_;
};

std::string ratio(std::size_t num, std::size_t den) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(3) << (den ? static_cast<double>(num) / static_cast<double>(den) : 0.0);
  return os.str();
}

void print_report(const RewriteReport& r, std::size_t before, std::size_t after, std::ostream& os) {
  Table t({"metric", "value"});
  t.row("nodes_before", before);
  t.row("nodes_after", after);
  t.row("nodes_removed", r.nodes_removed);
  t.row("nodes_fused", r.nodes_fused);
  t.row("constants_folded", r.constants_folded);
  t.row("fusions", r.fusions);
  t.row("identities", r.identities);
  t.row("rounds", r.rounds);
  t.print(os);
}

struct Planned {
  Ordering ordering;
  std::vector<std::size_t> sizes;
  AllocationPlan plan;
};

Planned plan_graph(const Graph& graph, const std::map<NodeId, Shape>& shapes = {}) {
  Planned p;
  p.ordering = topological_order(graph);
  p.sizes = node_sizes(infer_shapes(graph, shapes));
  p.plan = plan_memory(graph, p.ordering, p.sizes);
  auto problems = validate_plan(graph, p.ordering, p.sizes, p.plan);
  if (!problems.empty()) throw ViolationError("plan failed validation: " + problems.front());
  return p;
}

std::string frontier_line(const std::vector<FrontierPoint>& points) {
  std::string line;
  for (const auto& p : points) {
    if (!line.empty()) line += ' ';
    line += "(" + std::to_string(p.space) + "," + std::to_string(p.time) + ")";
  }
  return line;
}

std::string move_text(const Move& m) {
  switch (m.kind) {
    case MoveKind::Place: return "place " + std::to_string(m.vertex);
    case MoveKind::Slide: return "slide " + std::to_string(m.from) + " -> " + std::to_string(m.vertex);
    case MoveKind::Remove: return "remove " + std::to_string(m.vertex);
  }
  return {};
}

int cmd_validate(const Flags& flags, std::istream& in, std::ostream& out) {
  auto graph = load_graph(flags, in);
  if (!flags.dot.empty()) write_text(flags.dot, to_dot(graph), out);
  auto violations = validate(graph);
  for (const auto& v : violations) out << v << '\n';
  if (!violations.empty()) return kExitViolation;
  out << "ok: " << graph.size() << " nodes\n";
  return kExitOk;
}

int cmd_shapes(const Flags& flags, std::istream& in, std::ostream& out) {
  auto graph = load_valid_graph(flags, in);
  auto shapes = infer_shapes(graph);
  Table t({"id", "op", "name", "shape", "bytes"});
  for (const auto& n : graph.nodes()) {
    t.row(n.id, op_name(n.op.kind()), n.name, shapes[n.id].to_string(), shapes[n.id].size_bytes());
  }
  t.print(out);
  return kExitOk;
}

int cmd_optimise(const Flags& flags, std::istream& in, std::ostream& out, std::ostream& err) {
  auto graph = load_valid_graph(flags, in);
  auto result = optimise(graph);
  auto text = dump_canonical(graph_to_json(result.graph));
  if (!flags.dot.empty()) write_text(flags.dot, to_dot(result.graph), out);
  if (flags.out.empty() || flags.out == "-") {
    out << text;
    print_report(result.report, graph.size(), result.graph.size(), err);
  } else {
    write_text(flags.out, text, out);
    print_report(result.report, graph.size(), result.graph.size(), out);
  }
  return kExitOk;
}

void print_plan_stats(const Graph& graph, const Planned& p, std::ostream& os) {
  const auto naive = naive_bytes(p.sizes);
  Table t({"metric", "value"});
  t.row("nodes", graph.size());
  t.row("blocks", p.plan.block_sizes.size());
  t.row("pool_bytes", p.plan.pool_bytes());
  t.row("external_bytes", p.plan.external_bytes);
  t.row("peak_bytes", p.plan.peak_bytes);
  t.row("naive_bytes", naive);
  t.row("ratio", ratio(p.plan.peak_bytes, naive));
  t.row("pool_lookups", p.plan.stats.lookups);
  t.row("max_comparisons_per_lookup", p.plan.stats.max_comparisons_per_lookup);
  t.row("max_free_blocks", p.plan.stats.max_free_blocks);
  t.print(os);
}

int cmd_plan(const Flags& flags, std::istream& in, std::ostream& out) {
  auto graph = load_valid_graph(flags, in);
  auto p = plan_graph(graph);
  auto text = dump_canonical(plan_to_json(p.plan));
  if (!flags.dot.empty()) write_text(flags.dot, to_dot(graph), out);
  if (flags.out.empty() || flags.out == "-") {
    out << text;
  } else {
    write_text(flags.out, text, out);
    print_plan_stats(graph, p, out);
  }
  return kExitOk;
}

int cmd_eval(const Flags& flags, std::istream& in, std::ostream& out) {
  auto graph = load_valid_graph(flags, in);
  InputMap inputs;
  if (!flags.inputs.empty()) {
    try {
      inputs = inputs_from_json(graph, read_json(flags.inputs, in));
    } catch (const ParseError& e) {
      throw UsageError(flags.inputs + ": " + e.what());
    }
  }
  for (const auto& [id, t] : inputs) graph.set_value(id, t);
  std::map<NodeId, Shape> shapes;
  for (const auto& n : graph.nodes()) {
    if (n.op.kind() == OpKind::Var && graph.value(n.id)) shapes.emplace(n.id, graph.value(n.id)->shape());
  }
  auto p = plan_graph(graph, shapes);

  std::map<NodeId, Tensor> results;
  for (std::size_t round = 0; round < flags.rounds; ++round) {
    results = evaluate(graph, p.plan);
    update_iopairs(graph, results);
  }
  Json j = Json::object();
  for (auto o : graph.outputs()) j[graph.node(o).name] = tensor_to_json(results.at(o));
  out << dump_canonical(j);
  return kExitOk;
}

int cmd_pebble(const Flags& flags, std::istream& in, std::ostream& out) {
  auto graph = load_valid_graph(flags, in);
  auto dag = PebbleDag::from_graph(graph);
  auto goals = pebble_goals(graph);
  if (flags.space_budget) {
    auto s = solve_pebbling(dag, goals, *flags.space_budget);
    if (!s) throw ViolationError("no strategy with " + std::to_string(*flags.space_budget) + " pebbles");
    for (const auto& m : s->moves) out << move_text(m) << '\n';
    out << "space " << s->space << " time " << s->time << '\n';
    if (!flags.frontier) return kExitOk;
  }
  out << frontier_line(pareto_frontier(dag, goals)) << '\n';
  return kExitOk;
}

int cmd_dot(const Flags& flags, std::istream& in, std::ostream& out) {
  auto graph = load_graph(flags, in);
  write_text(flags.out, to_dot(graph), out);
  return kExitOk;
}

int cmd_stats(const Flags& flags, std::istream& in, std::ostream& out) {
  auto graph = load_valid_graph(flags, in);
  print_plan_stats(graph, plan_graph(graph), out);
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
  CLI::App app{"Static computation graph engine: validate, optimise, plan, evaluate and pebble graphs", "cgraph"};
  app.require_subcommand(1);
  Flags flags;

  auto add_graph = [&](CLI::App* sub) {
    sub->add_option("graph", flags.graph, "graph JSON file, or - for standard input");
    sub->add_option("--seed", flags.seed, "use a random graph from this seed instead of a file");
    sub->add_option("--nodes", flags.nodes, "node count of the random graph")->needs("--seed");
    return sub;
  };
  auto* validate_cmd = add_graph(app.add_subcommand("validate", "report broken invariants"));
  validate_cmd->add_option("--dot", flags.dot, "also write the graph as DOT");
  auto* shapes_cmd = add_graph(app.add_subcommand("shapes", "print the inferred shape table"));
  auto* optimise_cmd = add_graph(app.add_subcommand("optimise", "run the rewrite passes"));
  optimise_cmd->add_option("--out", flags.out, "write the rewritten graph here");
  optimise_cmd->add_option("--dot", flags.dot, "also write the rewritten graph as DOT");
  auto* plan_cmd = add_graph(app.add_subcommand("plan", "plan memory"));
  plan_cmd->add_option("--out", flags.out, "write the plan here");
  plan_cmd->add_option("--dot", flags.dot, "also write the graph as DOT");
  auto* eval_cmd = add_graph(app.add_subcommand("eval", "evaluate the outputs"));
  eval_cmd->add_option("--inputs", flags.inputs, "tensor literals keyed by Var name or id");
  eval_cmd->add_option("--rounds", flags.rounds, "evaluations, applying update edges after each")
      ->check(CLI::PositiveNumber);
  auto* pebble_cmd = add_graph(app.add_subcommand("pebble", "solve the pebble game exactly"));
  pebble_cmd->add_flag("--frontier", flags.frontier, "print the space/time Pareto frontier");
  pebble_cmd->add_option("--space-budget", flags.space_budget, "print a fastest strategy with at most K pebbles");
  auto* dot_cmd = add_graph(app.add_subcommand("dot", "write Graphviz DOT"));
  dot_cmd->add_option("--out", flags.out, "write the DOT here");
  auto* stats_cmd = add_graph(app.add_subcommand("stats", "peak bytes against naive allocation"));

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (validate_cmd->parsed()) return cmd_validate(flags, in, out);
    if (shapes_cmd->parsed()) return cmd_shapes(flags, in, out);
    if (optimise_cmd->parsed()) return cmd_optimise(flags, in, out, err);
    if (plan_cmd->parsed()) return cmd_plan(flags, in, out);
    if (eval_cmd->parsed()) return cmd_eval(flags, in, out);
    if (pebble_cmd->parsed()) return cmd_pebble(flags, in, out);
    if (dot_cmd->parsed()) return cmd_dot(flags, in, out);
    if (stats_cmd->parsed()) return cmd_stats(flags, in, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitViolation;
  }
  return kExitUsage;
}

}  // namespace cgraph
