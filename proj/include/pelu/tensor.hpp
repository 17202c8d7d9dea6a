#ifndef PELU_TENSOR_HPP
#define PELU_TENSOR_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "pelu/errors.hpp"

namespace pelu {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& shape);

template <typename Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using MatrixMap = Eigen::Map<RowMatrix<Scalar>>;
template <typename Scalar>
using ConstMatrixMap = Eigen::Map<const RowMatrix<Scalar>>;
template <typename Scalar>
using VectorMap = Eigen::Map<Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>;
template <typename Scalar>
using ConstVectorMap = Eigen::Map<const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>;

/// Dense row-major n-dimensional array. Every extent is positive and the
/// element count always equals the product of the extents.
template <typename Scalar>
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(Shape shape, Scalar fill = Scalar(0)) : shape_(std::move(shape)) {
    check_shape(shape_);
    data_.assign(shape_size(shape_), fill);
  }

  Tensor(Shape shape, std::vector<Scalar> data) : shape_(std::move(shape)), data_(std::move(data)) {
    check_shape(shape_);
    if (shape_size(shape_) != data_.size()) {
      throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                       " does not match shape " + shape_string(shape_));
    }
  }

  /// Rank-1 tensor from a list of values.
  static Tensor vector(std::initializer_list<Scalar> values) {
    return Tensor({values.size()}, std::vector<Scalar>(values));
  }

  /// Rank-2 tensor from nested rows.
  static Tensor matrix(std::initializer_list<std::initializer_list<Scalar>> rows) {
    const std::size_t m = rows.size();
    const std::size_t n = m == 0 ? 0 : rows.begin()->size();
    std::vector<Scalar> data;
    data.reserve(m * n);
    for (const auto& row : rows) {
      if (row.size() != n) throw ShapeError("ragged matrix literal");
      data.insert(data.end(), row.begin(), row.end());
    }
    return Tensor({m, n}, std::move(data));
  }

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }

  std::span<Scalar> data() { return data_; }
  std::span<const Scalar> data() const { return data_; }
  const std::vector<Scalar>& values() const { return data_; }

  Scalar& operator[](std::size_t i) { return data_[i]; }
  const Scalar& operator[](std::size_t i) const { return data_[i]; }

  Scalar& operator()(std::size_t i, std::size_t j) { return data_[i * shape_[1] + j]; }
  const Scalar& operator()(std::size_t i, std::size_t j) const { return data_[i * shape_[1] + j]; }

  /// Views a rank-2 tensor as an Eigen row-major matrix.
  MatrixMap<Scalar> mat() {
    require_rank2();
    return MatrixMap<Scalar>(data_.data(), Eigen::Index(shape_[0]), Eigen::Index(shape_[1]));
  }
  ConstMatrixMap<Scalar> mat() const {
    require_rank2();
    return ConstMatrixMap<Scalar>(data_.data(), Eigen::Index(shape_[0]), Eigen::Index(shape_[1]));
  }

  VectorMap<Scalar> vec() { return VectorMap<Scalar>(data_.data(), Eigen::Index(data_.size())); }
  ConstVectorMap<Scalar> vec() const {
    return ConstVectorMap<Scalar>(data_.data(), Eigen::Index(data_.size()));
  }

  Tensor reshaped(Shape shape) const& { return Tensor(std::move(shape), data_); }
  Tensor reshaped(Shape shape) && { return Tensor(std::move(shape), std::move(data_)); }

  void fill(Scalar value) { std::fill(data_.begin(), data_.end(), value); }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](Scalar v) { return std::isfinite(v); });
  }

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  static void check_shape(const Shape& shape) {
    for (std::size_t extent : shape) {
      if (extent == 0) throw ShapeError("tensor extents must be positive, got " + shape_string(shape));
    }
  }

  void require_rank2() const {
    if (shape_.size() != 2) throw ShapeError("expected rank-2 tensor, got " + shape_string(shape_));
  }

  Shape shape_;
  std::vector<Scalar> data_;
};

using Tensord = Tensor<double>;
using Tensorf = Tensor<float>;

namespace detail {

template <typename Scalar>
const Tensor<Scalar>& checked(const Tensor<Scalar>& t, const char* op) {
  if (!t.all_finite()) throw NumericalError(std::string(op) + " produced a non-finite value");
  return t;
}

template <typename Scalar>
void require_same_shape(const Tensor<Scalar>& a, const Tensor<Scalar>& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                     shape_string(b.shape()));
  }
}

}  // namespace detail

template <typename Scalar>
Tensor<Scalar> matmul(const Tensor<Scalar>& a, const Tensor<Scalar>& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    throw ShapeError("matmul: incompatible shapes " + shape_string(a.shape()) + " and " +
                     shape_string(b.shape()));
  }
  Tensor<Scalar> out({a.dim(0), b.dim(1)});
  out.mat().noalias() = a.mat() * b.mat();
  return detail::checked(out, "matmul");
}

template <typename Scalar>
Tensor<Scalar> add(const Tensor<Scalar>& a, const Tensor<Scalar>& b) {
  detail::require_same_shape(a, b, "add");
  Tensor<Scalar> out(a.shape());
  out.vec() = a.vec() + b.vec();
  return detail::checked(out, "add");
}

template <typename Scalar>
Tensor<Scalar> sub(const Tensor<Scalar>& a, const Tensor<Scalar>& b) {
  detail::require_same_shape(a, b, "sub");
  Tensor<Scalar> out(a.shape());
  out.vec() = a.vec() - b.vec();
  return detail::checked(out, "sub");
}

template <typename Scalar>
Tensor<Scalar> mul(const Tensor<Scalar>& a, const Tensor<Scalar>& b) {
  detail::require_same_shape(a, b, "mul");
  Tensor<Scalar> out(a.shape());
  out.vec() = a.vec().cwiseProduct(b.vec());
  return detail::checked(out, "mul");
}

template <typename Scalar>
Tensor<Scalar> scale(const Tensor<Scalar>& a, Scalar factor) {
  Tensor<Scalar> out(a.shape());
  out.vec() = a.vec() * factor;
  return detail::checked(out, "scale");
}

template <typename Scalar, typename Fn>
Tensor<Scalar> map(const Tensor<Scalar>& a, Fn&& fn) {
  Tensor<Scalar> out(a.shape());
  std::transform(a.data().begin(), a.data().end(), out.data().begin(), std::forward<Fn>(fn));
  return detail::checked(out, "map");
}

enum class Reduction { Sum, Mean, Max };

/// Reduces over all elements (no axis, result shape [1]) or along one axis,
/// which is removed from the shape. Reducing a rank-1 tensor along axis 0
/// also yields shape [1].
template <typename Scalar>
Tensor<Scalar> reduce(Reduction op, const Tensor<Scalar>& t, std::optional<std::size_t> axis = {}) {
  if (t.empty()) throw ShapeError("reduce: empty tensor");
  if (!axis) {
    Scalar value{};
    switch (op) {
      case Reduction::Sum: value = t.vec().sum(); break;
      case Reduction::Mean: value = t.vec().sum() / Scalar(t.size()); break;
      case Reduction::Max: value = t.vec().maxCoeff(); break;
    }
    return Tensor<Scalar>({1}, std::vector<Scalar>{value});
  }
  if (*axis >= t.rank()) {
    throw ShapeError("reduce: axis " + std::to_string(*axis) + " out of range for " +
                     shape_string(t.shape()));
  }
  const auto& shape = t.shape();
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < *axis; ++i) outer *= shape[i];
  for (std::size_t i = *axis + 1; i < shape.size(); ++i) inner *= shape[i];
  const std::size_t extent = shape[*axis];

  Shape out_shape;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i != *axis) out_shape.push_back(shape[i]);
  }
  if (out_shape.empty()) out_shape.push_back(1);
  Tensor<Scalar> out(out_shape);
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t i = 0; i < inner; ++i) {
      Scalar acc = t[o * extent * inner + i];
      for (std::size_t k = 1; k < extent; ++k) {
        const Scalar v = t[(o * extent + k) * inner + i];
        acc = op == Reduction::Max ? std::max(acc, v) : acc + v;
      }
      if (op == Reduction::Mean) acc /= Scalar(extent);
      out[o * inner + i] = acc;
    }
  }
  return out;
}

template <typename Scalar>
Scalar sum(const Tensor<Scalar>& t) { return reduce(Reduction::Sum, t)[0]; }
template <typename Scalar>
Scalar mean(const Tensor<Scalar>& t) { return reduce(Reduction::Mean, t)[0]; }
template <typename Scalar>
Scalar max(const Tensor<Scalar>& t) { return reduce(Reduction::Max, t)[0]; }

}  // namespace pelu

#endif  // PELU_TENSOR_HPP
