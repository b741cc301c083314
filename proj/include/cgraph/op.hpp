#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include "cgraph/tensor.hpp"

namespace cgraph {

enum class OpKind : std::uint8_t {
  Var,
  Const,
  Add,
  Sub,
  Mul,
  Div,
  Neg,
  Sin,
  Cos,
  Exp,
  Sqrt,
  Pow,
  ScalarAdd,
  ScalarMul,
  Sum,
  MatMul,
  Reshape,
  Repeat,
  FMA,
  FusedAdagrad,
  Delay,
};

struct SumParams {
  std::optional<int> axis;  // nullopt reduces every axis
  bool operator==(const SumParams&) const = default;
};
struct ReshapeParams {
  Shape target;
  bool operator==(const ReshapeParams&) const = default;
};
struct RepeatParams {
  int axis = 0;
  int count = 1;
  bool operator==(const RepeatParams&) const = default;
};
struct ScalarParams {
  double value = 0.0;
  bool operator==(const ScalarParams&) const = default;
};
struct AdagradParams {
  double lr = 0.0;
  double eps = 0.0;
  bool operator==(const AdagradParams&) const = default;
};
/// Host function looked up by name at evaluation time; unary, with a declared output shape.
struct DelayParams {
  std::string fn;
  Shape out_shape;
  bool operator==(const DelayParams&) const = default;
};

/// An operation label. Parametrised kinds carry validated parameters.
class Op {
 public:
  using Params =
      std::variant<std::monostate, SumParams, ReshapeParams, RepeatParams, ScalarParams, AdagradParams, DelayParams>;

  /// Builds a parameterless op. Throws std::invalid_argument for kinds that need parameters.
  explicit Op(OpKind kind);

  static Op sum(std::optional<int> axis = std::nullopt);
  static Op reshape(Shape target);
  static Op repeat(int axis, int count);
  static Op scalar_add(double value);
  static Op scalar_mul(double value);
  static Op fused_adagrad(double lr, double eps);
  static Op delay(std::string fn, Shape out_shape);

  OpKind kind() const noexcept { return kind_; }
  std::size_t arity() const noexcept;

  template <class P>
  const P& params() const {
    return std::get<P>(params_);
  }
  const Params& raw_params() const noexcept { return params_; }

  bool operator==(const Op&) const = default;

 private:
  Op(OpKind kind, Params params) : kind_(kind), params_(std::move(params)) {}

  OpKind kind_;
  Params params_;
};

std::string_view op_name(OpKind kind) noexcept;
std::optional<OpKind> op_kind_from_name(std::string_view name) noexcept;
std::size_t arity_of(OpKind kind) noexcept;

/// Pointwise ops with trailing-dimension broadcasting over all operands.
bool is_broadcasting_elementwise(OpKind kind) noexcept;

/// Whether the op may write its result over a same-sized operand it is still reading.
bool is_inplace_safe(OpKind kind) noexcept;

}  // namespace cgraph
