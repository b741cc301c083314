#include "cgraph/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

namespace cgraph {

Shape::Shape(std::initializer_list<std::int64_t> dims) : Shape(std::vector<std::int64_t>(dims)) {}

Shape::Shape(std::vector<std::int64_t> dims) : dims_(std::move(dims)) {
  for (auto d : dims_) {
    if (d < 1) throw ShapeError("dimension extents must be >= 1, got " + std::to_string(d));
  }
}

std::size_t Shape::numel() const noexcept {
  return std::accumulate(dims_.begin(), dims_.end(), std::size_t{1},
                         [](std::size_t acc, std::int64_t d) { return acc * static_cast<std::size_t>(d); });
}

std::string Shape::to_string() const {
  std::string out = "[";
  for (std::size_t i = 0; i < dims_.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(dims_[i]);
  }
  return out + "]";
}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
  if (data_.size() != shape_.numel()) {
    throw ShapeError("tensor data has " + std::to_string(data_.size()) + " elements, shape " +
                     shape_.to_string() + " needs " + std::to_string(shape_.numel()));
  }
}

Tensor Tensor::filled(Shape shape, double value) {
  auto n = shape.numel();
  return Tensor(std::move(shape), std::vector<double>(n, value));
}

bool close_relative(double a, double b, double tol) {
  if (a == b) return true;
  if (std::isnan(a) || std::isnan(b)) return std::isnan(a) && std::isnan(b);
  if (!std::isfinite(a) || !std::isfinite(b)) return false;
  return std::fabs(a - b) <= tol * std::max(std::fabs(a), std::fabs(b));
}

bool close_relative(const Tensor& a, const Tensor& b, double tol) {
  if (a.shape() != b.shape()) return false;
  for (std::size_t i = 0; i < a.numel(); ++i) {
    if (!close_relative(a[i], b[i], tol)) return false;
  }
  return true;
}

}  // namespace cgraph
