#include <algorithm>

#include "cgraph/fixtures.hpp"
#include "cgraph/graph.hpp"
#include "doctest.h"

using namespace cgraph;

namespace {

bool mentions(const std::vector<std::string>& violations, const std::string& text) {
  return std::any_of(violations.begin(), violations.end(),
                     [&](const std::string& v) { return v.find(text) != std::string::npos; });
}

Node make(NodeId id, Op op, std::vector<NodeId> preds) {
  Node n;
  n.id = id;
  n.op = std::move(op);
  n.preds = std::move(preds);
  n.name = "n" + std::to_string(id);
  return n;
}

}  // namespace

TEST_CASE("builder rejects malformed nodes") {
  Graph g;
  auto x = g.add_var(Shape{}, "x");
  CHECK_THROWS_AS(g.add_node(Op(OpKind::Add), {x}), GraphError);
  CHECK_THROWS_AS(g.add_node(Op(OpKind::Sin), {7}), GraphError);
  auto s = g.add_node(Op(OpKind::Sin), {x});
  CHECK(g.node(s).name == "n1");
  g.freeze();
  CHECK_THROWS_AS(g.add_node(Op(OpKind::Sin), {x}), GraphError);
}

TEST_CASE("reference graphs are valid") {
  CHECK(validate(fixtures::fig1()).empty());
  CHECK(validate(fixtures::fig3()).empty());
  CHECK(validate(fixtures::counter()).empty());
  CHECK(validate(fixtures::mlp(2, 3, 4, 2)).empty());
}

TEST_CASE("validation names each broken rule") {
  SUBCASE("no outputs") {
    Graph g;
    g.add_var(Shape{}, "x");
    CHECK(mentions(validate(g), "no outputs"));
  }
  SUBCASE("update edge into a computed node") {
    Graph g;
    auto x = g.add_var(Shape{}, "x");
    auto s = g.add_node(Op(OpKind::Sin), {x});
    auto c = g.add_node(Op(OpKind::Cos), {s});
    g.add_output(c);
    g.add_iopair(c, s);
    auto v = validate(g);
    CHECK(mentions(v, "update target not Var: node 1 (Sin)"));
  }
  SUBCASE("two update edges into one Var") {
    Graph g;
    auto x = g.add_var(Shape{}, "x");
    auto a = g.add_node(Op(OpKind::Sin), {x});
    auto b = g.add_node(Op(OpKind::Cos), {x});
    g.add_output(a);
    g.add_output(b);
    g.add_iopair(a, x);
    g.add_iopair(b, x);
    CHECK(mentions(validate(g), "duplicate update target"));
  }
  SUBCASE("dead computed node") {
    Graph g;
    auto x = g.add_var(Shape{}, "x");
    auto a = g.add_node(Op(OpKind::Sin), {x});
    g.add_node(Op(OpKind::Cos), {x});
    g.add_output(a);
    auto v = validate(g);
    CHECK(mentions(v, "unreachable from outputs: node 2 (Cos)"));
    CHECK(v.size() == 1);
  }
  SUBCASE("unused Var is allowed") {
    Graph g;
    auto x = g.add_var(Shape{}, "x");
    g.add_var(Shape{}, "unused");
    g.add_output(g.add_node(Op(OpKind::Sin), {x}));
    CHECK(validate(g).empty());
  }
  SUBCASE("input that is not a Var") {
    Graph g;
    auto x = g.add_var(Shape{}, "x");
    auto s = g.add_node(Op(OpKind::Sin), {x});
    g.add_input(s);
    g.add_output(s);
    CHECK(mentions(validate(g), "input not Var"));
  }
  SUBCASE("structures only from_parts can express") {
    std::vector<Node> nodes{make(0, Op(OpKind::Var), {}), make(1, Op(OpKind::Add), {0, 2}),
                            make(2, Op(OpKind::Sin), {1}), make(3, Op(OpKind::Cos), {0, 0}),
                            make(4, Op(OpKind::Const), {}), make(5, Op(OpKind::Neg), {9})};
    auto g = Graph::from_parts(nodes, {0}, {2, 3, 4, 5, 11}, {});
    auto v = validate(g);
    CHECK(mentions(v, "cycle"));
    CHECK(mentions(v, "arity mismatch: node 3 (Cos)"));
    CHECK(mentions(v, "Const without value: node 4"));
    CHECK(mentions(v, "unknown predecessor 9"));
    CHECK(mentions(v, "unknown output"));
    CHECK_THROWS_AS(topological_order(g), GraphError);
  }
}

TEST_CASE("topological order is post-order from the outputs") {
  auto order = topological_order(fixtures::fig1());
  CHECK(order.sequence == std::vector<NodeId>{0, 1, 2, 3, 4, 5});

  // Predecessors are visited left to right, so the second operand's chain comes later.
  Graph g;
  auto x = g.add_var(Shape{}, "x");
  auto y = g.add_var(Shape{}, "y");
  auto sy = g.add_node(Op(OpKind::Sin), {y});
  auto sx = g.add_node(Op(OpKind::Sin), {x});
  auto out = g.add_node(Op(OpKind::Add), {sx, sy});
  g.add_output(out);
  auto o = topological_order(g);
  CHECK(o.sequence == std::vector<NodeId>{x, sx, y, sy, out});
  for (std::size_t r = 0; r < o.sequence.size(); ++r) CHECK(o.rank[o.sequence[r]] == r);
}

TEST_CASE("every edge goes forward in the order") {
  auto g = fixtures::mlp(2, 3, 4, 2);
  auto o = topological_order(g);
  REQUIRE(o.sequence.size() == g.size());
  for (const auto& n : g.nodes()) {
    for (auto p : n.preds) CHECK(o.rank[p] < o.rank[n.id]);
  }
}

TEST_CASE("update edges copy values between rounds") {
  auto g = fixtures::counter();
  std::map<NodeId, Tensor> values{{1, Tensor::scalar(1.0)}};
  update_iopairs(g, values);
  CHECK((*g.value(0))[0] == 1.0);

  std::map<NodeId, Tensor> wrong{{1, Tensor(Shape{2}, {1.0, 2.0})}};
  CHECK_THROWS_AS(update_iopairs(g, wrong), GraphError);
  CHECK((*g.value(0))[0] == 1.0);  // nothing written on failure
  CHECK_THROWS_AS(update_iopairs(g, {}), GraphError);
}

TEST_CASE("value slots") {
  auto g = fixtures::fig1();
  CHECK_NOTHROW(g.set_value(1, Tensor::scalar(4.0)));
  CHECK_THROWS_AS(g.set_value(0, Tensor::scalar(4.0)), GraphError);  // frozen Const
  CHECK_THROWS_AS(g.set_value(2, Tensor::scalar(4.0)), GraphError);  // computed node
}

TEST_CASE("keep flags and out-degrees") {
  auto g = fixtures::fig3();
  auto keep = g.keep_flags();
  CHECK(keep == std::vector<bool>{true, false, false, true, false, true});
  CHECK(g.out_degrees() == std::vector<std::size_t>{1, 2, 1, 1, 1, 0});

  Graph sq;
  auto x = sq.add_var(Shape{}, "x");
  sq.add_output(sq.add_node(Op(OpKind::Mul), {x, x}));
  CHECK(sq.out_degrees()[x] == 2);
}

TEST_CASE("DOT export") {
  auto dot = to_dot(fixtures::counter());
  CHECK(dot.rfind("digraph cgraph {", 0) == 0);
  CHECK(dot.find("n0 -> n1;") != std::string::npos);
  CHECK(dot.find("n1 -> n0 [style=dashed];") != std::string::npos);
  CHECK(dot.find("doublecircle") != std::string::npos);
  CHECK(dot == to_dot(fixtures::counter()));

  Graph g;
  auto x = g.add_var(Shape{}, "say \"hi\"");
  g.add_output(g.add_node(Op(OpKind::Sin), {x}));
  CHECK(to_dot(g).find("say \\\"hi\\\"") != std::string::npos);
}
