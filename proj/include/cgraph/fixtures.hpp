#pragma once

#include "cgraph/graph.hpp"

/// Small reference graphs shared by tests, the acceptance suite and the CLI.
namespace cgraph::fixtures {

/// x2 = 2 - x1; x4 = x2 * x3; x5 = sin(x4). Ids 0..5 are c, x1, x2, x3, x4, x5;
/// all scalar, inputs {x1, x3}, output {x5}.
Graph fig1();

/// Six scalar nodes with edges 0->1, 1->5, 1->2, 2->4, 3->4, 4->5; output 5.
/// Vertex 1 feeds both 2 and 5, so keeping it alive costs a third pebble.
Graph fig3();

/// c' = c + 1 with update edge (c', c); c starts at 0.
Graph counter();

/// Add(Mul(x, y), z) over [2, 3] inputs.
Graph fma_pattern();

/// lr * g / (sqrt(s) + eps) with lr and eps as one-element Const nodes:
/// Var g, Var s, Const lr, Mul, Sqrt, Const eps, Add, Div.
Graph adagrad_pattern(double lr = 0.1, double eps = 1e-8);

/// Var followed by `length` same-shaped elementwise unary ops; the last one is the output.
Graph elementwise_chain(std::size_t length, Shape shape = Shape{});

/// Three dense layers: x[batch, in] -> sin(x W1 + b1) -> sin(. W2 + b2) -> . W3 + b3.
Graph mlp(std::int64_t batch = 64, std::int64_t in = 128, std::int64_t hidden = 128, std::int64_t out = 10);

}  // namespace cgraph::fixtures
