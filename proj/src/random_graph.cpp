#include "cgraph/random_graph.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "cgraph/shape_infer.hpp"

namespace cgraph {
namespace {

// Values past this bound are squashed through Sin before feeding anything that amplifies.
constexpr double kTameBound = 50.0;

struct Entry {
  NodeId id;
  Shape shape;
  double bound;       // upper bound on |value|
  bool positive;      // every element > 0
};

class Builder {
 public:
  Builder(std::uint64_t seed, const RandomGraphOptions& options) : rng_(seed), options_(options) {
    std::uniform_int_distribution<std::int64_t> extent(1, 4);
    rows_ = extent(rng_);
    cols_ = extent(rng_);
  }

  Graph build() {
    const int vars = uniform(2, 4);
    for (int i = 0; i < vars; ++i) fresh_var(family_shape(), true);
    while (g_.size() < options_.nodes) step();
    finish();
    return std::move(g_);
  }

 private:
  int uniform(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  double real(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  bool chance(double p) { return std::bernoulli_distribution(p)(rng_); }

  Shape family_shape() {
    switch (uniform(0, 5)) {
      case 0: return Shape{};
      case 1: return Shape{cols_};
      case 2: return Shape{1, cols_};
      case 3: return Shape{rows_, 1};
      default: return Shape{rows_, cols_};
    }
  }

  Tensor random_tensor(const Shape& shape, double lo, double hi) {
    std::vector<double> data(shape.numel());
    for (auto& x : data) x = real(lo, hi);
    return Tensor(shape, std::move(data));
  }

  Entry fresh_var(Shape shape, bool pooled) {
    auto id = g_.add_var(shape, "v" + std::to_string(g_.size()));
    g_.set_value(id, random_tensor(shape, -1.0, 1.0));
    g_.add_input(id);
    vars_.push_back(id);
    return remember(Entry{id, std::move(shape), 1.0, false}, pooled);
  }

  Entry constant(Shape shape, double lo, double hi) {
    auto t = random_tensor(shape, lo, hi);
    double bound = 0.0;
    bool positive = true;
    for (double x : t.data()) {
      bound = std::max(bound, std::abs(x));
      positive = positive && x > 0.0;
    }
    auto id = g_.add_const(std::move(t));
    return remember(Entry{id, std::move(shape), bound, positive}, false);
  }

  Entry constant_value(Shape shape, double value) {
    auto id = g_.add_const(Tensor::filled(shape, value));
    return remember(Entry{id, std::move(shape), std::abs(value), value > 0.0}, false);
  }

  Entry remember(Entry e, bool pooled) {
    uses_.resize(g_.size(), 0);
    shapes_.resize(g_.size());
    shapes_[e.id] = e.shape;
    if (pooled) pool_.push_back(e);
    return e;
  }

  Entry node(Op op, std::vector<NodeId> preds, double bound, bool positive = false) {
    std::vector<Shape> operands;
    for (auto p : preds) operands.push_back(shape_of(p));
    auto shape = infer_node_shape(op, operands);
    for (auto p : preds) ++uses_.at(p);
    auto id = g_.add_node(std::move(op), std::move(preds));
    return remember(Entry{id, std::move(shape), bound, positive}, true);
  }

  const Shape& shape_of(NodeId id) const { return shapes_.at(id); }

  // Recent nodes are favoured so the graph grows deep rather than wide.
  Entry pick() {
    const auto n = pool_.size();
    if (n > 8 && chance(0.7)) return pool_[n - 1 - uniform(0, 7)];
    return pool_[uniform(0, static_cast<int>(n) - 1)];
  }

  std::optional<Entry> pick_shape(const Shape& shape) {
    std::vector<Entry> matches;
    for (const auto& e : pool_) {
      if (e.shape == shape) matches.push_back(e);
    }
    if (matches.empty()) return std::nullopt;
    return matches[uniform(0, static_cast<int>(matches.size()) - 1)];
  }

  Entry tame(const Entry& e, double limit = kTameBound) {
    if (e.bound <= limit) return e;
    return node(Op(OpKind::Sin), {e.id}, 1.0);
  }

  // exp(sin(x)) lies in [1/e, e].
  Entry make_positive(const Entry& e) {
    if (e.positive && e.bound <= kTameBound) return e;
    auto s = node(Op(OpKind::Sin), {e.id}, 1.0);
    return node(Op(OpKind::Exp), {s.id}, std::exp(1.0), true);
  }

  void step() {
    const int action = uniform(0, options_.patterns ? 16 : 11);
    switch (action) {
      case 0: {
        auto a = pick();
        constexpr OpKind kUnary[] = {OpKind::Neg, OpKind::Sin, OpKind::Cos};
        auto kind = kUnary[uniform(0, 2)];
        node(Op(kind), {a.id}, kind == OpKind::Neg ? a.bound : 1.0);
        break;
      }
      case 1: make_positive(pick()); break;
      case 2: {
        auto a = tame(pick());
        auto b = tame(pick());
        constexpr OpKind kBinary[] = {OpKind::Add, OpKind::Sub, OpKind::Mul};
        auto kind = kBinary[uniform(0, 2)];
        node(Op(kind), {a.id, b.id}, kind == OpKind::Mul ? a.bound * b.bound : a.bound + b.bound);
        break;
      }
      case 3: {
        auto a = tame(pick());
        auto b = make_positive(pick());
        node(Op(OpKind::Div), {a.id, b.id}, a.bound * std::exp(1.0));
        break;
      }
      case 4: {
        auto a = make_positive(pick());
        if (chance(0.5)) {
          node(Op(OpKind::Sqrt), {a.id}, std::sqrt(a.bound), true);
        } else {
          auto b = tame(pick(), 2.0);
          node(Op(OpKind::Pow), {a.id, b.id}, std::pow(std::max(a.bound, std::exp(1.0)), 2.0), true);
        }
        break;
      }
      case 5: {
        auto a = tame(pick());
        double v = std::round(real(-2.0, 2.0) * 4.0) / 4.0;
        if (chance(0.5)) {
          node(Op::scalar_add(v), {a.id}, a.bound + std::abs(v));
        } else {
          node(Op::scalar_mul(v), {a.id}, a.bound * std::abs(v));
        }
        break;
      }
      case 6: {
        auto a = tame(pick());
        if (a.shape.rank() == 2 && chance(0.6)) {
          node(Op::sum(0), {a.id}, a.bound * static_cast<double>(a.shape[0]));
        } else {
          node(Op::sum(), {a.id}, a.bound * static_cast<double>(a.shape.numel()));
        }
        break;
      }
      case 7: {
        if (auto a = pick_shape(Shape{1, cols_})) {
          node(Op::reshape(Shape{cols_}), {a->id}, a->bound, a->positive);
        } else if (auto b = pick_shape(Shape{cols_})) {
          node(Op::reshape(Shape{1, cols_}), {b->id}, b->bound, b->positive);
        }
        break;
      }
      case 8: {
        if (auto a = pick_shape(Shape{1, cols_})) {
          node(Op::repeat(0, static_cast<int>(rows_)), {a->id}, a->bound, a->positive);
        } else if (auto b = pick_shape(Shape{rows_, 1})) {
          node(Op::repeat(1, static_cast<int>(cols_)), {b->id}, b->bound, b->positive);
        }
        break;
      }
      case 9: {
        auto a = pick_shape(Shape{rows_, cols_});
        if (!a) break;
        auto x = tame(*a);
        auto w = fresh_var(Shape{cols_, cols_}, false);
        node(Op(OpKind::MatMul), {x.id, w.id}, x.bound * static_cast<double>(cols_));
        break;
      }
      case 10: {
        auto a = pick();
        if (chance(0.5)) {
          node(Op::delay("tanh", a.shape), {a.id}, 1.0);
        } else {
          node(Op::delay("relu", a.shape), {a.id}, a.bound);
        }
        break;
      }
      case 11: {
        auto a = tame(pick());
        auto c = constant(chance(0.5) ? Shape{} : Shape{cols_}, -2.0, 2.0);
        if (chance(0.5)) {
          node(Op(OpKind::Add), {a.id, c.id}, a.bound + c.bound);
        } else {
          node(Op(OpKind::Mul), {c.id, a.id}, a.bound * c.bound);
        }
        break;
      }
      case 12: {  // a * b + c
        auto a = tame(pick());
        auto b = tame(pick());
        auto c = tame(pick());
        auto m = node(Op(OpKind::Mul), {a.id, b.id}, a.bound * b.bound);
        node(Op(OpKind::Add), {m.id, c.id}, m.bound + c.bound);
        break;
      }
      case 13: {  // lr * g / (sqrt(s) + eps)
        auto grad = tame(pick());
        auto s = make_positive(grad);
        auto lr = constant_value(Shape{}, std::round(real(0.01, 1.0) * 100.0) / 100.0);
        auto scaled = node(Op(OpKind::Mul), {lr.id, grad.id}, lr.bound * grad.bound);
        auto root = node(Op(OpKind::Sqrt), {s.id}, std::sqrt(s.bound), true);
        auto eps = constant_value(Shape{}, 1e-8);
        auto denom = node(Op(OpKind::Add), {root.id, eps.id}, root.bound + eps.bound, true);
        node(Op(OpKind::Div), {scaled.id, denom.id}, scaled.bound * std::exp(0.5));
        break;
      }
      case 14: {  // algebraic identities
        auto a = pick();
        switch (uniform(0, 2)) {
          case 0: node(Op(OpKind::Mul), {a.id, constant_value(Shape{}, 1.0).id}, a.bound, a.positive); break;
          case 1: node(Op(OpKind::Add), {constant_value(Shape{}, 0.0).id, a.id}, a.bound, a.positive); break;
          default: node(Op(OpKind::Mul), {a.id, constant_value(Shape{}, 0.0).id}, 0.0); break;
        }
        break;
      }
      case 15: {  // constant-only subexpression
        auto a = tame(pick());
        auto c1 = constant(Shape{}, -2.0, 2.0);
        auto c2 = constant(Shape{}, -2.0, 2.0);
        auto d = node(Op(OpKind::Sub), {c1.id, c2.id}, c1.bound + c2.bound);
        auto e = node(Op(OpKind::Cos), {d.id}, 1.0);
        node(Op(OpKind::Mul), {a.id, e.id}, a.bound);
        break;
      }
      default: {  // repeat over a unit axis feeding a broadcast
        auto a = pick_shape(Shape{1, cols_});
        auto b = pick_shape(Shape{rows_, cols_});
        if (!a || !b) break;
        auto r = node(Op::repeat(0, static_cast<int>(rows_)), {a->id}, a->bound);
        auto x = tame(r);
        auto y = tame(*b);
        node(Op(OpKind::Add), {x.id, y.id}, x.bound + y.bound);
        break;
      }
    }
  }

  void finish() {
    std::vector<NodeId> sinks;
    for (const auto& n : g_.nodes()) {
      if (n.op.kind() == OpKind::Var || n.op.kind() == OpKind::Const) continue;
      if (uses_[n.id] == 0) sinks.push_back(n.id);
    }
    if (sinks.empty()) sinks.push_back(static_cast<NodeId>(g_.size() - 1));
    for (auto s : sinks) g_.add_output(s);

    if (options_.update_edges && chance(0.4)) {
      std::vector<IoPair> candidates;
      for (auto s : sinks) {
        for (auto v : vars_) {
          if (s != v && shape_of(s) == shape_of(v)) candidates.push_back({s, v});
        }
      }
      if (!candidates.empty()) {
        auto pair = candidates[uniform(0, static_cast<int>(candidates.size()) - 1)];
        g_.add_iopair(pair.source, pair.target);
      }
    }
    g_.freeze();
  }

  std::mt19937_64 rng_;
  RandomGraphOptions options_;
  std::int64_t rows_ = 1;
  std::int64_t cols_ = 1;
  Graph g_;
  std::vector<Shape> shapes_;  // by node id
  std::vector<Entry> pool_;
  std::vector<NodeId> vars_;
  std::vector<std::size_t> uses_;
};

}  // namespace

Graph random_graph(std::uint64_t seed, const RandomGraphOptions& options) {
  return Builder(seed, options).build();
}

}  // namespace cgraph
