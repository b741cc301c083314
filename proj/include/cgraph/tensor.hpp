#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace cgraph {

/// Width of one tensor element. The whole engine works on 64-bit reals.
inline constexpr std::size_t kElementBytes = sizeof(double);

/// Ordered list of dimension extents. The empty list is a scalar.
class Shape {
 public:
  Shape() = default;
  Shape(std::initializer_list<std::int64_t> dims);
  explicit Shape(std::vector<std::int64_t> dims);

  const std::vector<std::int64_t>& dims() const noexcept { return dims_; }
  std::size_t rank() const noexcept { return dims_.size(); }
  bool is_scalar() const noexcept { return dims_.empty(); }
  std::int64_t operator[](std::size_t axis) const { return dims_.at(axis); }

  /// Product of extents (1 for a scalar).
  std::size_t numel() const noexcept;
  std::size_t size_bytes() const noexcept { return numel() * kElementBytes; }

  std::string to_string() const;

  bool operator==(const Shape&) const = default;

 private:
  std::vector<std::int64_t> dims_;
};

class ShapeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Dense row-major tensor of 64-bit reals.
class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, std::vector<double> data);

  static Tensor scalar(double value) { return Tensor(Shape{}, {value}); }
  static Tensor filled(Shape shape, double value);

  const Shape& shape() const noexcept { return shape_; }
  std::span<const double> data() const noexcept { return data_; }
  std::span<double> data() noexcept { return data_; }
  std::size_t numel() const noexcept { return data_.size(); }
  double operator[](std::size_t i) const { return data_[i]; }

  bool operator==(const Tensor&) const = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

/// |a - b| <= tol * max(|a|, |b|) elementwise; equal non-finite values match.
bool close_relative(const Tensor& a, const Tensor& b, double tol);
bool close_relative(double a, double b, double tol);

}  // namespace cgraph
