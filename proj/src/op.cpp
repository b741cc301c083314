#include "cgraph/op.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

namespace cgraph {
namespace {

constexpr std::array<std::string_view, 21> kNames = {
    "Var", "Const", "Add",  "Sub",    "Mul",       "Div",       "Neg",     "Sin",    "Cos",    "Exp",          "Sqrt",
    "Pow", "ScalarAdd", "ScalarMul", "Sum", "MatMul", "Reshape", "Repeat", "FMA", "FusedAdagrad", "Delay"};

bool needs_params(OpKind kind) {
  switch (kind) {
    case OpKind::Sum:
    case OpKind::Reshape:
    case OpKind::Repeat:
    case OpKind::ScalarAdd:
    case OpKind::ScalarMul:
    case OpKind::FusedAdagrad:
    case OpKind::Delay:
      return true;
    default:
      return false;
  }
}

}  // namespace

Op::Op(OpKind kind) : kind_(kind), params_(std::monostate{}) {
  if (kind == OpKind::Sum) {
    params_ = SumParams{};
  } else if (needs_params(kind)) {
    throw std::invalid_argument(std::string(op_name(kind)) + " requires parameters");
  }
}

Op Op::sum(std::optional<int> axis) {
  if (axis && *axis < 0) throw std::invalid_argument("Sum axis must be non-negative");
  return Op(OpKind::Sum, SumParams{axis});
}

Op Op::reshape(Shape target) { return Op(OpKind::Reshape, ReshapeParams{std::move(target)}); }

Op Op::repeat(int axis, int count) {
  if (axis < 0) throw std::invalid_argument("Repeat axis must be non-negative");
  if (count < 1) throw std::invalid_argument("Repeat count must be >= 1");
  return Op(OpKind::Repeat, RepeatParams{axis, count});
}

Op Op::scalar_add(double value) { return Op(OpKind::ScalarAdd, ScalarParams{value}); }
Op Op::scalar_mul(double value) { return Op(OpKind::ScalarMul, ScalarParams{value}); }

Op Op::fused_adagrad(double lr, double eps) {
  if (!(eps > 0.0) || !std::isfinite(eps)) throw std::invalid_argument("FusedAdagrad eps must be > 0");
  if (!std::isfinite(lr)) throw std::invalid_argument("FusedAdagrad lr must be finite");
  return Op(OpKind::FusedAdagrad, AdagradParams{lr, eps});
}

Op Op::delay(std::string fn, Shape out_shape) {
  if (fn.empty()) throw std::invalid_argument("Delay needs a host function name");
  return Op(OpKind::Delay, DelayParams{std::move(fn), std::move(out_shape)});
}

std::size_t Op::arity() const noexcept { return arity_of(kind_); }

std::string_view op_name(OpKind kind) noexcept { return kNames[static_cast<std::size_t>(kind)]; }

std::optional<OpKind> op_kind_from_name(std::string_view name) noexcept {
  for (std::size_t i = 0; i < kNames.size(); ++i) {
    if (kNames[i] == name) return static_cast<OpKind>(i);
  }
  return std::nullopt;
}

std::size_t arity_of(OpKind kind) noexcept {
  switch (kind) {
    case OpKind::Var:
    case OpKind::Const:
      return 0;
    case OpKind::Add:
    case OpKind::Sub:
    case OpKind::Mul:
    case OpKind::Div:
    case OpKind::Pow:
    case OpKind::MatMul:
    case OpKind::FusedAdagrad:
      return 2;
    case OpKind::FMA:
      return 3;
    default:
      return 1;
  }
}

bool is_broadcasting_elementwise(OpKind kind) noexcept {
  switch (kind) {
    case OpKind::Add:
    case OpKind::Sub:
    case OpKind::Mul:
    case OpKind::Div:
    case OpKind::Pow:
    case OpKind::FMA:
      return true;
    default:
      return false;
  }
}

bool is_inplace_safe(OpKind kind) noexcept {
  switch (kind) {
    case OpKind::Add:
    case OpKind::Sub:
    case OpKind::Mul:
    case OpKind::Div:
    case OpKind::Neg:
    case OpKind::Sin:
    case OpKind::Cos:
    case OpKind::Exp:
    case OpKind::Sqrt:
    case OpKind::Pow:
    case OpKind::ScalarAdd:
    case OpKind::ScalarMul:
    case OpKind::FMA:
    case OpKind::FusedAdagrad:
      return true;
    default:
      return false;
  }
}

}  // namespace cgraph
