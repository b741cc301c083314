#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "cgraph/evaluator.hpp"
#include "cgraph/shape_infer.hpp"

namespace cgraph {
namespace {

// Maps a flat output index to the flat index of a broadcast operand.
class Indexer {
 public:
  Indexer(const Shape& out, const Shape& in) {
    if (in.numel() == out.numel()) {
      mode_ = Mode::Identity;
    } else if (in.numel() == 1) {
      mode_ = Mode::Scalar;
    } else {
      mode_ = Mode::Mapped;
      const auto rank = out.rank();
      const auto pad = rank - in.rank();
      std::vector<std::size_t> strides(rank, 0);
      std::size_t stride = 1;
      for (std::size_t a = rank; a-- > pad;) {
        const auto extent = static_cast<std::size_t>(in.dims()[a - pad]);
        if (extent != 1) strides[a] = stride;
        stride *= extent;
      }
      map_.resize(out.numel());
      std::vector<std::size_t> idx(rank, 0);
      std::size_t offset = 0;
      for (std::size_t i = 0; i < map_.size(); ++i) {
        map_[i] = offset;
        for (std::size_t a = rank; a-- > 0;) {
          offset += strides[a];
          if (++idx[a] < static_cast<std::size_t>(out.dims()[a])) break;
          offset -= strides[a] * idx[a];
          idx[a] = 0;
        }
      }
    }
  }

  std::size_t operator()(std::size_t i) const {
    switch (mode_) {
      case Mode::Identity:
        return i;
      case Mode::Scalar:
        return 0;
      case Mode::Mapped:
        break;
    }
    return map_[i];
  }

 private:
  enum class Mode { Identity, Scalar, Mapped };
  Mode mode_;
  std::vector<std::size_t> map_;
};

template <class F>
void unary(const TensorRef& a, MutableTensorRef out, F f) {
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] = f(a.data[i]);
}

template <class F>
void binary(const TensorRef& a, const TensorRef& b, MutableTensorRef out, F f) {
  const Indexer ia(*out.shape, *a.shape), ib(*out.shape, *b.shape);
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    const double x = a.data[ia(i)];
    const double y = b.data[ib(i)];
    out.data[i] = f(x, y);
  }
}

// Elementwise helpers for Delay.
Tensor map_tensor(const Tensor& t, double (*f)(double)) {
  std::vector<double> data(t.data().begin(), t.data().end());
  for (auto& v : data) v = f(v);
  return Tensor(t.shape(), std::move(data));
}

}  // namespace

void DelayRegistry::add(std::string name, DelayFn fn) { fns_[std::move(name)] = std::move(fn); }

const DelayFn* DelayRegistry::find(const std::string& name) const {
  auto it = fns_.find(name);
  return it == fns_.end() ? nullptr : &it->second;
}

const DelayRegistry& DelayRegistry::builtin() {
  static const DelayRegistry registry = [] {
    DelayRegistry r;
    r.add("tanh", [](const Tensor& t) { return map_tensor(t, [](double v) { return std::tanh(v); }); });
    r.add("relu", [](const Tensor& t) { return map_tensor(t, [](double v) { return v > 0.0 ? v : 0.0; }); });
    r.add("square", [](const Tensor& t) { return map_tensor(t, [](double v) { return v * v; }); });
    r.add("softplus", [](const Tensor& t) { return map_tensor(t, [](double v) { return std::log1p(std::exp(v)); }); });
    return r;
  }();
  return registry;
}

void run_kernel(const Op& op, std::span<const TensorRef> in, MutableTensorRef out, const DelayRegistry& delays) {
  if (in.size() != op.arity()) throw std::invalid_argument("kernel operand count does not match arity");
  if (out.data.size() != out.shape->numel()) throw std::invalid_argument("kernel output view has the wrong size");

  switch (op.kind()) {
    case OpKind::Var:
    case OpKind::Const:
      throw std::invalid_argument("leaf nodes have no kernel");
    case OpKind::Add:
      return binary(in[0], in[1], out, [](double x, double y) { return x + y; });
    case OpKind::Sub:
      return binary(in[0], in[1], out, [](double x, double y) { return x - y; });
    case OpKind::Mul:
      return binary(in[0], in[1], out, [](double x, double y) { return x * y; });
    case OpKind::Div:
      return binary(in[0], in[1], out, [](double x, double y) { return x / y; });
    case OpKind::Pow:
      return binary(in[0], in[1], out, [](double x, double y) { return std::pow(x, y); });
    case OpKind::Neg:
      return unary(in[0], out, [](double x) { return -x; });
    case OpKind::Sin:
      return unary(in[0], out, [](double x) { return std::sin(x); });
    case OpKind::Cos:
      return unary(in[0], out, [](double x) { return std::cos(x); });
    case OpKind::Exp:
      return unary(in[0], out, [](double x) { return std::exp(x); });
    case OpKind::Sqrt:
      return unary(in[0], out, [](double x) { return std::sqrt(x); });
    case OpKind::ScalarAdd: {
      const double v = op.params<ScalarParams>().value;
      return unary(in[0], out, [v](double x) { return x + v; });
    }
    case OpKind::ScalarMul: {
      const double v = op.params<ScalarParams>().value;
      return unary(in[0], out, [v](double x) { return v * x; });
    }
    case OpKind::FMA: {
      // Product rounded before the addition (no contraction), matching Mul then Add bit for bit.
      const Indexer ia(*out.shape, *in[0].shape), ib(*out.shape, *in[1].shape), ic(*out.shape, *in[2].shape);
      for (std::size_t i = 0; i < out.data.size(); ++i) {
        const double product = in[0].data[ia(i)] * in[1].data[ib(i)];
        const double c = in[2].data[ic(i)];
        out.data[i] = product + c;
      }
      return;
    }
    case OpKind::FusedAdagrad: {
      const auto [lr, eps] = op.params<AdagradParams>();
      const Indexer is(*out.shape, *in[1].shape);
      for (std::size_t i = 0; i < out.data.size(); ++i) {
        const double g = in[0].data[i];
        const double s = in[1].data[is(i)];
        out.data[i] = (lr * g) / (std::sqrt(s) + eps);
      }
      return;
    }
    case OpKind::Sum: {
      const auto& axis = op.params<SumParams>().axis;
      const auto& shape = *in[0].shape;
      if (!axis) {
        double acc = 0.0;
        for (double v : in[0].data) acc += v;
        out.data[0] = acc;
        return;
      }
      std::size_t outer = 1, inner = 1;
      for (int a = 0; a < *axis; ++a) outer *= static_cast<std::size_t>(shape[a]);
      for (std::size_t a = *axis + 1; a < shape.rank(); ++a) inner *= static_cast<std::size_t>(shape[a]);
      const auto extent = static_cast<std::size_t>(shape[*axis]);
      for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t k = 0; k < inner; ++k) {
          double acc = 0.0;
          for (std::size_t j = 0; j < extent; ++j) acc += in[0].data[(o * extent + j) * inner + k];
          out.data[o * inner + k] = acc;
        }
      }
      return;
    }
    case OpKind::MatMul: {
      const auto m = static_cast<std::size_t>((*in[0].shape)[0]);
      const auto k = static_cast<std::size_t>((*in[0].shape)[1]);
      const auto n = static_cast<std::size_t>((*in[1].shape)[1]);
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          double acc = 0.0;
          for (std::size_t t = 0; t < k; ++t) acc += in[0].data[i * k + t] * in[1].data[t * n + j];
          out.data[i * n + j] = acc;
        }
      }
      return;
    }
    case OpKind::Reshape:
      std::copy(in[0].data.begin(), in[0].data.end(), out.data.begin());
      return;
    case OpKind::Repeat: {
      const auto [axis, count] = op.params<RepeatParams>();
      const auto& shape = *in[0].shape;
      std::size_t outer = 1, inner = 1;
      for (int a = 0; a < axis; ++a) outer *= static_cast<std::size_t>(shape[a]);
      for (std::size_t a = axis + 1; a < shape.rank(); ++a) inner *= static_cast<std::size_t>(shape[a]);
      const auto extent = static_cast<std::size_t>(shape[axis]);
      const auto out_extent = extent * static_cast<std::size_t>(count);
      for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t j = 0; j < out_extent; ++j) {
          const auto src = (o * extent + j / count) * inner;
          const auto dst = (o * out_extent + j) * inner;
          std::copy_n(in[0].data.begin() + src, inner, out.data.begin() + dst);
        }
      }
      return;
    }
    case OpKind::Delay: {
      const auto& p = op.params<DelayParams>();
      const DelayFn* fn = delays.find(p.fn);
      if (!fn) throw std::invalid_argument("unknown Delay function '" + p.fn + "'");
      Tensor arg(*in[0].shape, std::vector<double>(in[0].data.begin(), in[0].data.end()));
      Tensor result = (*fn)(arg);
      if (result.shape() != *out.shape) {
        throw ShapeError("Delay function '" + p.fn + "' returned " + result.shape().to_string() + ", declared " +
                         out.shape->to_string());
      }
      std::copy(result.data().begin(), result.data().end(), out.data.begin());
      return;
    }
  }
}

}  // namespace cgraph
