#include <algorithm>
#include <cmath>

#include "cgraph/fixtures.hpp"
#include "cgraph/planner.hpp"
#include "cgraph/random_graph.hpp"
#include "cgraph/shape_infer.hpp"
#include "doctest.h"
#include "oracle/reference.hpp"

using namespace cgraph;

namespace {

struct Setup {
  Graph graph;
  Ordering ordering;
  std::vector<std::size_t> sizes;
  AllocationPlan plan;
};

Setup plan_of(Graph g) {
  Setup s{std::move(g), {}, {}, {}};
  s.ordering = topological_order(s.graph);
  s.sizes = node_sizes(infer_shapes(s.graph));
  s.plan = plan_memory(s.graph, s.ordering, s.sizes);
  return s;
}

}  // namespace

TEST_CASE("block pool is best fit") {
  BlockPool pool;
  auto a = pool.find_best_block(16);
  auto b = pool.find_best_block(32);
  auto c = pool.find_best_block(16);
  CHECK(a == 0);
  CHECK(b == 1);
  CHECK(c == 2);
  pool.release(b);
  pool.release(c);
  pool.release(a);
  CHECK(pool.find_best_block(8) == a);       // smallest fitting, lowest id on ties
  CHECK(pool.find_best_block(24) == b);      // 16-byte block c does not fit
  CHECK(pool.find_best_block(64) == c);      // nothing fits: grow the largest free block
  CHECK(pool.block_sizes()[c] == 64);
  CHECK(pool.find_best_block(8) == 3);       // pool empty: fresh block
  pool.release(a);
  pool.release(b);
  const BlockId preferred[] = {b};
  CHECK(pool.find_best_block(8, preferred) == b);  // a preferred block wins over a better fit
  CHECK(pool.is_free(a));
  CHECK_FALSE(pool.is_free(b));
}

TEST_CASE("fig1 plan uses one block") {
  auto s = plan_of(fixtures::fig1());
  CHECK(s.plan.block_sizes == std::vector<std::size_t>{8});
  CHECK(s.plan.pool_bytes() == 8);
  CHECK(s.plan.external == std::vector<NodeId>{0, 1, 3});
  CHECK(s.plan.external_bytes == 24);
  CHECK(s.plan.peak_bytes == 32);
  CHECK(s.plan.assignment[2] == BlockId{0});
  CHECK(s.plan.assignment[4] == BlockId{0});
  CHECK(s.plan.assignment[5] == BlockId{0});
  CHECK(validate_plan(s.graph, s.ordering, s.sizes, s.plan).empty());
  CHECK(oracle::check_occupancy(s.graph, s.plan, s.sizes).empty());
}

TEST_CASE("elementwise chain shares one block") {
  auto s = plan_of(fixtures::elementwise_chain(8, Shape{16}));
  CHECK(s.plan.block_sizes.size() == 1);
  CHECK(s.plan.pool_bytes() == 16 * kElementBytes);
}

TEST_CASE("keep-flagged values are never reused") {
  // The output sin(x) stays live; a later node may not take its block.
  Graph g;
  auto x = g.add_var(Shape{4}, "x");
  auto a = g.add_node(Op(OpKind::Sin), {x});
  auto b = g.add_node(Op(OpKind::Cos), {a});
  auto c = g.add_node(Op(OpKind::Neg), {b});
  g.add_output(a);
  g.add_output(c);
  g.freeze();
  auto s = plan_of(g);
  CHECK(s.plan.assignment[a] != s.plan.assignment[b]);
  CHECK(s.plan.assignment[a] != s.plan.assignment[c]);
  CHECK(s.plan.assignment[b] == s.plan.assignment[c]);
}

TEST_CASE("non-pointwise operators do not write over their operands") {
  Graph g;
  auto x = g.add_var(Shape{2, 2}, "x");
  auto w = g.add_var(Shape{2, 2}, "w");
  auto s = g.add_node(Op(OpKind::Sin), {x});
  auto m = g.add_node(Op(OpKind::MatMul), {s, w});
  g.add_output(m);
  g.freeze();
  auto p = plan_of(g);
  CHECK(p.plan.assignment[s] != p.plan.assignment[m]);
}

TEST_CASE("plan validation catches corrupted plans") {
  auto s = plan_of(fixtures::fig3());
  REQUIRE(validate_plan(s.graph, s.ordering, s.sizes, s.plan).empty());

  auto bad = s.plan;
  bad.assignment[2] = bad.assignment[1];  // cos(v1) over v1 while v1 still feeds v5
  auto problems = validate_plan(s.graph, s.ordering, s.sizes, bad);
  REQUIRE_FALSE(problems.empty());
  CHECK(problems.front().find("overlapping lifetimes") != std::string::npos);
  CHECK_FALSE(oracle::check_occupancy(s.graph, bad, s.sizes).empty());

  auto small = s.plan;
  small.block_sizes[*small.assignment[5]] = 4;
  CHECK(validate_plan(s.graph, s.ordering, s.sizes, small).front().find("undersized block") != std::string::npos);
}

TEST_CASE("orderings are checked") {
  auto g = fixtures::fig1();
  auto sizes = node_sizes(infer_shapes(g));
  Ordering backwards;
  backwards.sequence = {5, 4, 3, 2, 1, 0};
  backwards.rank = {5, 4, 3, 2, 1, 0};
  CHECK_THROWS_AS(plan_memory(g, backwards, sizes), PlanError);
  Ordering partial;
  partial.sequence = {0, 1, 2};
  partial.rank = {0, 1, 2, 0, 0, 0};
  CHECK_THROWS_AS(plan_memory(g, partial, sizes), PlanError);
}

TEST_CASE("random plans are sound under an independent occupancy check") {
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    auto s = plan_of(random_graph(seed, {.nodes = 50}));
    INFO("seed " << seed);
    CHECK(validate_plan(s.graph, s.ordering, s.sizes, s.plan).empty());
    CHECK(oracle::check_occupancy(s.graph, s.plan, s.sizes) == "");
    CHECK(s.plan.pool_bytes() + s.plan.external_bytes == s.plan.peak_bytes);
    CHECK(s.plan.peak_bytes <= naive_bytes(s.sizes));
  }
}

TEST_CASE("pool lookups stay logarithmic") {
  auto s = plan_of(random_graph(7, {.nodes = 3000}));
  const auto& st = s.plan.stats;
  CHECK(st.lookups > 0);
  const double log_b = std::log2(static_cast<double>(st.max_free_blocks) + 2.0);
  CHECK(static_cast<double>(st.max_comparisons_per_lookup) <= 4.0 * log_b + 8.0);
}

TEST_CASE("MLP plan beats naive allocation") {
  auto s = plan_of(fixtures::mlp());
  CHECK(s.plan.pool_bytes() < naive_bytes(s.sizes) - s.plan.external_bytes);
}
