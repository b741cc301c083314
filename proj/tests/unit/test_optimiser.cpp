#include "cgraph/fixtures.hpp"
#include "cgraph/optimiser.hpp"
#include "cgraph/random_graph.hpp"
#include "doctest.h"
#include "oracle/reference.hpp"

using namespace cgraph;

namespace {

std::size_t count_kind(const Graph& g, OpKind kind) {
  std::size_t n = 0;
  for (const auto& node : g.nodes()) n += node.op.kind() == kind;
  return n;
}

void check_same_outputs(const Graph& before, const Graph& after, double tol = 1e-9) {
  auto a = oracle::reference_eval(before);
  auto b = oracle::reference_eval(after);
  REQUIRE(before.outputs().size() == after.outputs().size());
  for (std::size_t i = 0; i < before.outputs().size(); ++i) {
    CHECK(close_relative(a[before.outputs()[i]], b[after.outputs()[i]], tol));
  }
  REQUIRE(before.iopairs().size() == after.iopairs().size());
  for (std::size_t i = 0; i < before.iopairs().size(); ++i) {
    CHECK(close_relative(a[before.iopairs()[i].source], b[after.iopairs()[i].source], tol));
  }
}

Graph with_inputs(Graph g, std::uint64_t seed) {
  std::uint64_t state = seed;
  for (const auto& n : g.nodes()) {
    if (n.op.kind() != OpKind::Var) continue;
    const auto id = n.id;
    auto shape = *n.declared_shape;
    std::vector<double> data(shape.numel());
    for (auto& x : data) {
      state = state * 6364136223846793005ULL + 1442695040888963407ULL;
      x = static_cast<double>(state >> 11) / static_cast<double>(1ULL << 53) + 0.5;
    }
    g.set_value(id, Tensor(shape, std::move(data)));
  }
  return g;
}

}  // namespace

TEST_CASE("Mul feeding Add becomes one FMA") {
  auto g = with_inputs(fixtures::fma_pattern(), 1);
  auto r = optimise(g);
  CHECK(r.graph.size() == g.size() - 1);
  CHECK(count_kind(r.graph, OpKind::FMA) == 1);
  CHECK(r.report.fusions == 1);
  CHECK(r.report.nodes_fused == 1);
  check_same_outputs(g, r.graph, 0.0);
}

TEST_CASE("shared product is not fused") {
  Graph g;
  auto x = g.add_var(Shape{}, "x");
  auto y = g.add_var(Shape{}, "y");
  auto m = g.add_node(Op(OpKind::Mul), {x, y});
  auto a = g.add_node(Op(OpKind::Add), {m, x});
  g.add_output(a);
  g.add_output(m);
  g.freeze();
  CHECK(fuse_fma(g).graph.size() == g.size());
}

TEST_CASE("AdaGrad step fuses into one node") {
  auto g = with_inputs(fixtures::adagrad_pattern(), 2);
  auto r = optimise(g);
  CHECK(r.graph.size() == g.size() - 5);
  CHECK(count_kind(r.graph, OpKind::FusedAdagrad) == 1);
  const auto& fused = r.graph.node(r.graph.outputs()[0]);
  REQUIRE(fused.op.kind() == OpKind::FusedAdagrad);
  CHECK(fused.op.params<AdagradParams>().lr == 0.1);
  CHECK(fused.op.params<AdagradParams>().eps == 1e-8);
  check_same_outputs(g, r.graph);
}

TEST_CASE("AdaGrad written with scalar operators") {
  Graph g;
  auto grad = g.add_var(Shape{3}, "g");
  auto s = g.add_var(Shape{3}, "s");
  auto scaled = g.add_node(Op::scalar_mul(0.5), {grad});
  auto root = g.add_node(Op(OpKind::Sqrt), {s});
  auto denom = g.add_node(Op::scalar_add(1e-6), {root});
  g.add_output(g.add_node(Op(OpKind::Div), {scaled, denom}));
  g.freeze();
  g = with_inputs(g, 3);
  auto r = fuse_adagrad(g);
  CHECK(count_kind(r.graph, OpKind::FusedAdagrad) == 1);
  CHECK(r.graph.size() == 3);
  check_same_outputs(g, r.graph);
}

TEST_CASE("constant subgraphs fold") {
  Graph g;
  auto a = g.add_const(Tensor::scalar(2.0), "a");
  auto b = g.add_const(Tensor::scalar(0.5), "b");
  auto x = g.add_var(Shape{2}, "x");
  auto d = g.add_node(Op(OpKind::Sub), {a, b});
  auto e = g.add_node(Op(OpKind::Exp), {d});
  g.add_output(g.add_node(Op(OpKind::Mul), {x, e}));
  g.freeze();
  g = with_inputs(g, 4);
  auto r = fold_constants(g);
  CHECK(r.report.constants_folded == 2);
  CHECK(r.graph.size() == 3);
  check_same_outputs(g, r.graph, 0.0);
}

TEST_CASE("folding refuses to create non-finite constants") {
  Graph g;
  auto a = g.add_const(Tensor::scalar(1.0), "one");
  auto z = g.add_const(Tensor::scalar(0.0), "zero");
  auto x = g.add_var(Shape{}, "x");
  auto d = g.add_node(Op(OpKind::Div), {a, z});
  g.add_output(g.add_node(Op(OpKind::Add), {x, d}));
  g.freeze();
  CHECK_THROWS_AS(fold_constants(g), FoldError);
}

TEST_CASE("Delay is a folding barrier") {
  Graph g;
  auto c = g.add_const(Tensor::scalar(0.3), "c");
  auto t = g.add_node(Op::delay("tanh", Shape{}), {c});
  g.add_output(g.add_node(Op(OpKind::Sin), {t}));
  g.freeze();
  auto r = fold_constants(g);
  CHECK(r.graph.size() == 3);
  CHECK(count_kind(r.graph, OpKind::Delay) == 1);
}

TEST_CASE("algebraic identities") {
  Graph g;
  auto x = g.add_var(Shape{2}, "x");
  auto one = g.add_const(Tensor::scalar(1.0), "one");
  auto zero = g.add_const(Tensor::scalar(0.0), "zero");
  auto m = g.add_node(Op(OpKind::Mul), {x, one});
  auto a = g.add_node(Op(OpKind::Add), {zero, m});
  g.add_output(g.add_node(Op(OpKind::Sin), {a}));
  g.freeze();
  g = with_inputs(g, 5);
  auto r = simplify_identities(g);
  CHECK(r.report.identities == 2);
  CHECK(r.graph.size() == 2);
  check_same_outputs(g, r.graph, 0.0);

  // x * 1 must keep its broadcast shape when 1 is the larger operand.
  Graph h;
  auto y = h.add_var(Shape{}, "y");
  auto ones = h.add_const(Tensor::filled(Shape{3}, 1.0), "ones");
  h.add_output(h.add_node(Op(OpKind::Mul), {y, ones}));
  h.freeze();
  CHECK(simplify_identities(h).report.identities == 0);
}

TEST_CASE("outputs keep their positions when replaced") {
  Graph g;
  auto x = g.add_var(Shape{}, "x");
  auto one = g.add_const(Tensor::scalar(1.0), "one");
  auto m = g.add_node(Op(OpKind::Mul), {x, one});
  auto s = g.add_node(Op(OpKind::Sin), {x});
  g.add_output(s);
  g.add_output(m);
  g.freeze();
  auto r = optimise(g);
  REQUIRE(r.graph.outputs().size() == 2);
  CHECK(r.graph.node(r.graph.outputs()[0]).op.kind() == OpKind::Sin);
  CHECK(r.graph.node(r.graph.outputs()[1]).op.kind() == OpKind::Var);
  CHECK(validate(r.graph).empty());
}

TEST_CASE("optimise preserves semantics on random graphs") {
  for (std::uint64_t seed = 1000; seed < 1150; ++seed) {
    auto g = random_graph(seed, {.nodes = 40});
    auto r = optimise(g);
    INFO("seed " << seed);
    CHECK(r.graph.size() <= g.size());
    CHECK(validate(r.graph).empty());
    check_same_outputs(g, r.graph);
    auto again = optimise(r.graph);
    CHECK_FALSE(again.report.changed());
  }
}
