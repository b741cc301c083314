#include <cmath>

#include "cgraph/evaluator.hpp"
#include "cgraph/fixtures.hpp"
#include "cgraph/planner.hpp"
#include "cgraph/random_graph.hpp"
#include "cgraph/shape_infer.hpp"
#include "doctest.h"
#include "oracle/reference.hpp"

using namespace cgraph;

namespace {

AllocationPlan plan_for(const Graph& g, const InputMap& inputs = {}) {
  std::map<NodeId, Shape> shapes;
  for (const auto& [id, t] : inputs) shapes.emplace(id, t.shape());
  return plan_memory(g, topological_order(g), node_sizes(infer_shapes(g, shapes)));
}

}  // namespace

TEST_CASE("fig1 evaluates to sin((2 - x1) * x3)") {
  auto g = fixtures::fig1();
  InputMap in{{1, Tensor::scalar(0.5)}, {3, Tensor::scalar(3.0)}};
  auto out = evaluate(g, plan_for(g), in);
  REQUIRE(out.count(5));
  CHECK(out.at(5)[0] == std::sin((2.0 - 0.5) * 3.0));
  CHECK(eager_evaluate(g, in)[5][0] == out.at(5)[0]);
}

TEST_CASE("kernels match the reference definitions") {
  Graph g;
  auto a = g.add_var(Shape{2, 3}, "a");
  auto b = g.add_var(Shape{3}, "b");
  auto c = g.add_var(Shape{2, 1}, "c");
  auto w = g.add_var(Shape{3, 2}, "w");
  std::vector<NodeId> outs;
  auto add = [&](Op op, std::vector<NodeId> preds) {
    auto id = g.add_node(std::move(op), std::move(preds));
    outs.push_back(id);
    return id;
  };
  auto pos = add(Op(OpKind::Exp), {a});
  add(Op(OpKind::Add), {a, b});
  add(Op(OpKind::Sub), {c, b});
  add(Op(OpKind::Mul), {b, c});
  add(Op(OpKind::Div), {a, pos});
  add(Op(OpKind::Pow), {pos, b});
  add(Op(OpKind::Sqrt), {pos});
  add(Op(OpKind::Neg), {a});
  add(Op(OpKind::Cos), {b});
  add(Op::scalar_add(0.25), {a});
  add(Op::scalar_mul(-3.0), {c});
  add(Op::sum(), {a});
  add(Op::sum(0), {a});
  add(Op::sum(1), {a});
  add(Op(OpKind::MatMul), {a, w});
  add(Op::reshape(Shape{3, 2}), {a});
  add(Op::repeat(1, 2), {a});
  add(Op::repeat(0, 3), {c});
  add(Op(OpKind::FMA), {a, b, c});
  add(Op::fused_adagrad(0.1, 1e-8), {a, pos});
  add(Op::delay("tanh", Shape{2, 3}), {a});
  add(Op::delay("softplus", Shape{3}), {b});
  for (auto o : outs) g.add_output(o);
  g.freeze();

  InputMap in{{a, Tensor(Shape{2, 3}, {0.1, -0.2, 0.3, 0.4, -0.5, 0.6})},
              {b, Tensor(Shape{3}, {1.5, -2.0, 0.25})},
              {c, Tensor(Shape{2, 1}, {0.7, -1.1})},
              {w, Tensor(Shape{3, 2}, {1, 2, 3, 4, 5, 6})}};
  auto expect = oracle::reference_eval(g, in);
  auto got = evaluate(g, plan_for(g, in), in, {.poison_dead_values = true});
  for (auto o : outs) {
    INFO("node " << o << " " << op_name(g.node(o).op.kind()));
    CHECK(close_relative(got.at(o), expect[o], 1e-12));
  }
  CHECK(got.at(outs[13]) == Tensor(Shape{2}, {0.1 - 0.2 + 0.3, 0.4 - 0.5 + 0.6}));
  CHECK(got.at(outs[16]) == Tensor(Shape{2, 6}, {0.1, 0.1, -0.2, -0.2, 0.3, 0.3, 0.4, 0.4, -0.5, -0.5, 0.6, 0.6}));
}

TEST_CASE("input binding errors") {
  auto g = fixtures::fig1();
  auto plan = plan_for(g);
  CHECK_THROWS_AS(evaluate(g, plan, {{1, Tensor::scalar(1.0)}}), EvalError);  // x3 missing
  CHECK_THROWS_AS(evaluate(g, plan, {{1, Tensor::scalar(1.0)}, {3, Tensor::scalar(1.0)}, {2, Tensor::scalar(1.0)}}),
                  EvalError);
  CHECK_THROWS_AS(evaluate(g, plan, {{1, Tensor(Shape{2}, {1, 2})}, {3, Tensor::scalar(1.0)}}), EvalError);
}

TEST_CASE("Delay lookups") {
  Graph g;
  auto x = g.add_var(Shape{2}, "x");
  g.add_output(g.add_node(Op::delay("halve", Shape{2}), {x}));
  g.freeze();
  InputMap in{{x, Tensor(Shape{2}, {2.0, 4.0})}};
  CHECK_THROWS(evaluate(g, plan_for(g), in));
  DelayRegistry delays;
  delays.add("halve", [](const Tensor& t) {
    return Tensor(t.shape(), {t[0] / 2, t[1] / 2});
  });
  auto out = evaluate(g, plan_for(g), in, {.delays = &delays});
  CHECK(out.at(1) == Tensor(Shape{2}, {1.0, 2.0}));
  delays.add("bad", [](const Tensor&) { return Tensor::scalar(0.0); });
  Graph h;
  auto y = h.add_var(Shape{2}, "y");
  h.add_output(h.add_node(Op::delay("bad", Shape{2}), {y}));
  CHECK_THROWS(evaluate(h, plan_for(h), {{y, Tensor(Shape{2}, {1, 2})}}, {.delays = &delays}));
}

TEST_CASE("counter accumulates through its update edge") {
  auto g = fixtures::counter();
  auto plan = plan_for(g);
  for (int round = 1; round <= 3; ++round) {
    auto out = evaluate(g, plan);
    CHECK(out.at(1)[0] == round);
    update_iopairs(g, out);
  }
}

TEST_CASE("block-backed evaluation agrees with the reference on random graphs") {
  for (std::uint64_t seed = 100; seed < 250; ++seed) {
    auto g = random_graph(seed, {.nodes = 40});
    auto expect = oracle::reference_eval(g);
    auto got = evaluate(g, plan_for(g), {}, {.poison_dead_values = true});
    for (auto o : g.outputs()) {
      INFO("seed " << seed << " node " << o);
      CHECK(close_relative(got.at(o), expect[o], 1e-9));
    }
    auto eager = eager_evaluate(g);
    for (NodeId id = 0; id < g.size(); ++id) CHECK(close_relative(eager[id], expect[id], 1e-9));
  }
}
