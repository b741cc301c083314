#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cgraph/graph.hpp"
#include "cgraph/planner.hpp"

namespace cgraph {

/// Exhaustive search is limited to this many vertices.
inline constexpr std::size_t kMaxPebbleVertices = 20;

class PebbleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Vertex = std::uint32_t;

/// Topology only: predecessor lists by vertex.
struct PebbleDag {
  std::vector<std::vector<Vertex>> preds;

  std::size_t size() const noexcept { return preds.size(); }

  static PebbleDag from_edges(std::size_t vertices, std::span<const std::pair<Vertex, Vertex>> edges);
  static PebbleDag from_graph(const Graph& graph);
};

/// Goal vertices of a graph: outputs then update sources, without duplicates.
std::vector<Vertex> pebble_goals(const Graph& graph);

enum class MoveKind : std::uint8_t { Place, Slide, Remove };

struct Move {
  MoveKind kind;
  Vertex vertex;     // placed on, slid to, or removed from
  Vertex from = 0;   // Slide only: the predecessor whose pebble moves
  bool operator==(const Move&) const = default;
};

struct Strategy {
  std::vector<Move> moves;
  std::size_t space = 0;  // most pebbles on the DAG at once
  std::size_t time = 0;   // placements and slides; removals are free
};

struct FrontierPoint {
  std::size_t space;
  std::size_t time;
  bool operator==(const FrontierPoint&) const = default;
};

std::size_t default_time_cap(const PebbleDag& dag) noexcept;

/// A fastest strategy using at most `budget` pebbles, or nullopt when none
/// finishes within `time_cap` placements. 0-1 breadth-first search over
/// (pebbled set, goals reached) states; removals cost nothing.
std::optional<Strategy> solve_pebbling(const PebbleDag& dag, std::span<const Vertex> goals, std::size_t budget,
                                       std::optional<std::size_t> time_cap = std::nullopt);

std::optional<std::size_t> min_time_with_space(const PebbleDag& dag, std::span<const Vertex> goals,
                                               std::size_t budget,
                                               std::optional<std::size_t> time_cap = std::nullopt);

/// Non-dominated (space, time) pairs, largest space first.
std::vector<FrontierPoint> pareto_frontier(const PebbleDag& dag, std::span<const Vertex> goals,
                                           std::optional<std::size_t> time_cap = std::nullopt);

struct PlanSpaceReport {
  std::size_t planner_pebbles = 0;
  std::size_t planner_time = 0;
  std::size_t oracle_space = 0;  // least space of a time-minimal strategy
  std::size_t oracle_time = 0;
  std::size_t gap = 0;           // planner_pebbles - oracle_space
  std::string mapping;
};

/// Compares a plan's storage use with the exact pebbling optimum. Requires
/// every node to have the same byte size and at most kMaxPebbleVertices nodes.
PlanSpaceReport certify_plan_space(const Graph& graph, const AllocationPlan& plan);

}  // namespace cgraph
