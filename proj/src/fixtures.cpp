#include "cgraph/fixtures.hpp"

#include <cmath>

namespace cgraph::fixtures {

Graph fig1() {
  Graph g;
  auto c = g.add_const(Tensor::scalar(2.0), "c");
  auto x1 = g.add_var(Shape{}, "x1");
  auto x2 = g.add_node(Op(OpKind::Sub), {c, x1}, "x2");
  auto x3 = g.add_var(Shape{}, "x3");
  auto x4 = g.add_node(Op(OpKind::Mul), {x2, x3}, "x4");
  auto x5 = g.add_node(Op(OpKind::Sin), {x4}, "x5");
  g.add_input(x1);
  g.add_input(x3);
  g.add_output(x5);
  g.freeze();
  return g;
}

Graph fig3() {
  Graph g;
  auto v0 = g.add_var(Shape{}, "v0");
  auto v1 = g.add_node(Op(OpKind::Sin), {v0}, "v1");
  auto v2 = g.add_node(Op(OpKind::Cos), {v1}, "v2");
  auto v3 = g.add_var(Shape{}, "v3");
  auto v4 = g.add_node(Op(OpKind::Add), {v2, v3}, "v4");
  auto v5 = g.add_node(Op(OpKind::Mul), {v1, v4}, "v5");
  g.add_input(v0);
  g.add_input(v3);
  g.add_output(v5);
  g.freeze();
  return g;
}

Graph counter() {
  Graph g;
  auto c = g.add_var(Shape{}, "c");
  auto next = g.add_node(Op::scalar_add(1.0), {c}, "next");
  g.set_value(c, Tensor::scalar(0.0));
  g.add_input(c);
  g.add_output(next);
  g.add_iopair(next, c);
  g.freeze();
  return g;
}

Graph fma_pattern() {
  Graph g;
  auto x = g.add_var(Shape{2, 3}, "x");
  auto y = g.add_var(Shape{2, 3}, "y");
  auto z = g.add_var(Shape{2, 3}, "z");
  auto m = g.add_node(Op(OpKind::Mul), {x, y}, "m");
  auto a = g.add_node(Op(OpKind::Add), {m, z}, "a");
  for (auto v : {x, y, z}) g.add_input(v);
  g.add_output(a);
  g.freeze();
  return g;
}

Graph adagrad_pattern(double lr, double eps) {
  Graph g;
  auto grad = g.add_var(Shape{4}, "g");
  auto accum = g.add_var(Shape{4}, "s");
  auto lr_c = g.add_const(Tensor::scalar(lr), "lr");
  auto scaled = g.add_node(Op(OpKind::Mul), {lr_c, grad}, "scaled");
  auto root = g.add_node(Op(OpKind::Sqrt), {accum}, "root");
  auto eps_c = g.add_const(Tensor::scalar(eps), "eps");
  auto denom = g.add_node(Op(OpKind::Add), {root, eps_c}, "denom");
  auto step = g.add_node(Op(OpKind::Div), {scaled, denom}, "step");
  g.add_input(grad);
  g.add_input(accum);
  g.add_output(step);
  g.freeze();
  return g;
}

Graph elementwise_chain(std::size_t length, Shape shape) {
  Graph g;
  auto prev = g.add_var(shape, "x");
  g.add_input(prev);
  constexpr OpKind kCycle[] = {OpKind::Sin, OpKind::Neg, OpKind::Cos, OpKind::Exp};
  for (std::size_t i = 0; i < length; ++i) prev = g.add_node(Op(kCycle[i % 4]), {prev});
  g.add_output(prev);
  g.freeze();
  return g;
}

Graph mlp(std::int64_t batch, std::int64_t in, std::int64_t hidden, std::int64_t out) {
  Graph g;
  auto x = g.add_var(Shape{batch, in}, "x");
  g.add_input(x);
  auto layer = [&](NodeId input, std::int64_t fan_in, std::int64_t fan_out, int index, bool activate) {
    auto w = g.add_var(Shape{fan_in, fan_out}, "w" + std::to_string(index));
    auto b = g.add_var(Shape{fan_out}, "b" + std::to_string(index));
    g.add_input(w);
    g.add_input(b);
    auto mm = g.add_node(Op(OpKind::MatMul), {input, w});
    auto biased = g.add_node(Op(OpKind::Add), {mm, b});
    return activate ? g.add_node(Op(OpKind::Sin), {biased}) : biased;
  };
  auto h1 = layer(x, in, hidden, 1, true);
  auto h2 = layer(h1, hidden, hidden, 2, true);
  auto y = layer(h2, hidden, out, 3, false);
  g.add_output(y);
  g.freeze();
  return g;
}

}  // namespace cgraph::fixtures
