#include "cgraph/pebble.hpp"

#include <algorithm>
#include <bit>
#include <deque>
#include <set>
#include <unordered_map>

#include "cgraph/shape_infer.hpp"

namespace cgraph {

PebbleDag PebbleDag::from_edges(std::size_t vertices, std::span<const std::pair<Vertex, Vertex>> edges) {
  PebbleDag dag;
  dag.preds.resize(vertices);
  for (auto [u, v] : edges) {
    if (u >= vertices || v >= vertices) throw PebbleError("edge names a vertex outside the DAG");
    dag.preds[v].push_back(u);
  }
  return dag;
}

PebbleDag PebbleDag::from_graph(const Graph& graph) {
  PebbleDag dag;
  dag.preds.resize(graph.size());
  for (const auto& n : graph.nodes()) {
    for (auto p : n.preds) {
      // Duplicate edges (x * x) impose the same constraint once.
      if (std::find(dag.preds[n.id].begin(), dag.preds[n.id].end(), p) == dag.preds[n.id].end()) {
        dag.preds[n.id].push_back(p);
      }
    }
  }
  return dag;
}

std::vector<Vertex> pebble_goals(const Graph& graph) {
  std::vector<Vertex> goals;
  auto add = [&](NodeId id) {
    if (std::find(goals.begin(), goals.end(), id) == goals.end()) goals.push_back(id);
  };
  for (auto o : graph.outputs()) add(o);
  for (const auto& io : graph.iopairs()) add(io.source);
  return goals;
}

std::size_t default_time_cap(const PebbleDag& dag) noexcept { return 4 * dag.size(); }

namespace {

using State = std::uint64_t;  // low 20 bits: pebbled vertices; higher bits: goals reached

struct Visit {
  std::uint32_t dist;
  State parent;
  Move move;
};

void check_domain(const PebbleDag& dag, std::span<const Vertex> goals) {
  if (dag.size() > kMaxPebbleVertices) {
    throw PebbleError("exhaustive pebbling is limited to " + std::to_string(kMaxPebbleVertices) + " vertices, got " +
                      std::to_string(dag.size()));
  }
  if (goals.empty()) throw PebbleError("no goal vertices");
  for (auto g : goals) {
    if (g >= dag.size()) throw PebbleError("goal vertex " + std::to_string(g) + " is outside the DAG");
  }
}

std::size_t pebble_count(State s) { return std::popcount(s & ((State{1} << kMaxPebbleVertices) - 1)); }

}  // namespace

std::optional<Strategy> solve_pebbling(const PebbleDag& dag, std::span<const Vertex> goals, std::size_t budget,
                                       std::optional<std::size_t> time_cap) {
  check_domain(dag, goals);
  const auto n = dag.size();
  const auto cap = time_cap.value_or(default_time_cap(dag));

  std::vector<State> pred_mask(n, 0);
  for (Vertex v = 0; v < n; ++v) {
    for (auto p : dag.preds[v]) pred_mask[v] |= State{1} << p;
  }
  // goal_bit[v]: state bits set when v is pebbled
  std::vector<State> goal_bit(n, 0);
  for (std::size_t i = 0; i < goals.size(); ++i) goal_bit[goals[i]] |= State{1} << (kMaxPebbleVertices + i);
  const State all_goals = ((State{1} << goals.size()) - 1) << kMaxPebbleVertices;

  std::unordered_map<State, Visit> seen;
  std::deque<State> queue;
  seen.emplace(0, Visit{0, 0, Move{MoveKind::Remove, 0}});
  queue.push_back(0);

  std::optional<State> found;
  while (!queue.empty()) {
    const State s = queue.front();
    queue.pop_front();
    const auto dist = seen.at(s).dist;
    if ((s & all_goals) == all_goals) {
      found = s;
      break;
    }
    const State pebbles = s & ((State{1} << kMaxPebbleVertices) - 1);
    const auto count = pebble_count(s);

    auto relax = [&](State next, std::uint32_t cost, Move move) {
      const auto d = dist + cost;
      if (d > cap) return;
      auto [it, inserted] = seen.try_emplace(next, Visit{d, s, move});
      if (!inserted) {
        if (it->second.dist <= d) return;
        it->second = Visit{d, s, move};
      }
      if (cost == 0) {
        queue.push_front(next);
      } else {
        queue.push_back(next);
      }
    };

    for (Vertex v = 0; v < n; ++v) {
      const State bit = State{1} << v;
      if (pebbles & bit) {
        relax(s & ~bit, 0, Move{MoveKind::Remove, v});
        continue;
      }
      if ((pebbles & pred_mask[v]) != pred_mask[v]) continue;
      const State reached = s | bit | goal_bit[v];
      if (count + 1 <= budget) relax(reached, 1, Move{MoveKind::Place, v});
      for (auto u : dag.preds[v]) relax(reached & ~(State{1} << u), 1, Move{MoveKind::Slide, v, u});
    }
  }
  if (!found) return std::nullopt;

  Strategy strategy;
  for (State s = *found; s != 0;) {
    const auto& visit = seen.at(s);
    strategy.moves.push_back(visit.move);
    s = visit.parent;
  }
  std::reverse(strategy.moves.begin(), strategy.moves.end());

  std::size_t pebbles = 0;
  for (const auto& m : strategy.moves) {
    if (m.kind == MoveKind::Place) ++pebbles;
    if (m.kind == MoveKind::Remove) --pebbles;
    if (m.kind != MoveKind::Remove) ++strategy.time;
    strategy.space = std::max(strategy.space, pebbles);
  }
  return strategy;
}

std::optional<std::size_t> min_time_with_space(const PebbleDag& dag, std::span<const Vertex> goals,
                                               std::size_t budget, std::optional<std::size_t> time_cap) {
  auto s = solve_pebbling(dag, goals, budget, time_cap);
  if (!s) return std::nullopt;
  return s->time;
}

namespace {

// Vertices that must be pebbled at least once: the goals and all their ancestors.
std::size_t required_vertices(const PebbleDag& dag, std::span<const Vertex> goals) {
  std::vector<bool> seen(dag.size(), false);
  std::vector<Vertex> stack(goals.begin(), goals.end());
  std::size_t count = 0;
  while (!stack.empty()) {
    auto v = stack.back();
    stack.pop_back();
    if (seen[v]) continue;
    seen[v] = true;
    ++count;
    for (auto p : dag.preds[v]) stack.push_back(p);
  }
  return count;
}

}  // namespace

std::vector<FrontierPoint> pareto_frontier(const PebbleDag& dag, std::span<const Vertex> goals,
                                           std::optional<std::size_t> time_cap) {
  check_domain(dag, goals);
  const auto floor = required_vertices(dag, goals);
  std::vector<FrontierPoint> points;
  for (std::size_t k = 1; k <= dag.size(); ++k) {
    auto t = min_time_with_space(dag, goals, k, time_cap);
    if (!t) continue;
    if (points.empty() || *t < points.back().time) points.push_back({k, *t});
    if (*t == floor) break;
  }
  std::reverse(points.begin(), points.end());
  return points;
}

PlanSpaceReport certify_plan_space(const Graph& graph, const AllocationPlan& plan) {
  const auto sizes = node_sizes(infer_shapes(graph));
  if (!sizes.empty() && std::any_of(sizes.begin(), sizes.end(), [&](auto s) { return s != sizes.front(); })) {
    throw PebbleError("pebble counts only compare plans whose nodes all have the same size");
  }
  const auto n = graph.size();
  const auto dag = PebbleDag::from_graph(graph);
  const auto goals = pebble_goals(graph);

  PlanSpaceReport report;
  report.oracle_time = required_vertices(dag, goals);
  for (std::size_t k = 1; k <= n; ++k) {
    if (min_time_with_space(dag, goals, k) == report.oracle_time) {
      report.oracle_space = k;
      break;
    }
  }

  // Replay the plan: at each step count the distinct storage locations holding live values.
  std::vector<std::size_t> rank(n);
  for (std::size_t r = 0; r < plan.order.size(); ++r) rank[plan.order[r]] = r;
  std::vector<bool> pinned(n, false);
  for (auto g : goals) pinned[g] = true;
  std::vector<std::optional<std::size_t>> last(n);
  for (const auto& node : graph.nodes()) {
    if (pinned[node.id]) last[node.id] = n;
    for (auto p : node.preds) last[p] = std::max(last[p].value_or(0), rank[node.id]);
  }
  for (const auto& node : graph.nodes()) {
    if (!plan.assignment[node.id] && !last[node.id]) continue;  // unused input: never placed
    if (!last[node.id]) last[node.id] = rank[node.id];
    ++report.planner_time;
  }
  for (std::size_t r = 0; r < n; ++r) {
    std::set<std::pair<int, std::size_t>> storage;
    for (const auto& node : graph.nodes()) {
      if (!last[node.id] || rank[node.id] > r || *last[node.id] < r) continue;
      if (const auto& b = plan.assignment[node.id]) {
        storage.emplace(0, *b);
      } else {
        storage.emplace(1, node.id);
      }
    }
    report.planner_pebbles = std::max(report.planner_pebbles, storage.size());
  }
  report.gap = report.planner_pebbles - std::min(report.planner_pebbles, report.oracle_space);
  report.mapping =
      "planner pebbles = peak count of distinct storage locations holding live values along the plan's order "
      "(one per pool block; each Var/Const from its rank to its last consumer, outputs and update sources to the "
      "end); oracle = least space among strategies with minimal time (each required vertex pebbled once)";
  return report;
}

}  // namespace cgraph
