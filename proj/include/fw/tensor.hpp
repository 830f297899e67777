#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fw/error.hpp"

namespace fw {

// Extents of a dense tensor, rank 1 to 4. Images and feature volumes use
// (batch, channels, height, width).
class Shape {
 public:
  static constexpr int kMaxRank = 4;

  Shape() = default;
  Shape(std::initializer_list<int> dims) {
    assign(dims.begin(), dims.end());
  }
  explicit Shape(std::span<const int> dims) { assign(dims.begin(), dims.end()); }

  int rank() const { return rank_; }
  int operator[](int axis) const { return dims_[static_cast<std::size_t>(axis)]; }
  std::span<const int> dims() const { return {dims_.data(), static_cast<std::size_t>(rank_)}; }

  std::size_t numel() const {
    if (rank_ == 0) return 0;
    std::size_t n = 1;
    for (int i = 0; i < rank_; ++i) n *= static_cast<std::size_t>(dims_[i]);
    return n;
  }

  bool operator==(const Shape& other) const {
    return rank_ == other.rank_ &&
           std::equal(dims_.begin(), dims_.begin() + rank_, other.dims_.begin());
  }

  std::string str() const {
    std::string s = "[";
    for (int i = 0; i < rank_; ++i) {
      if (i) s += ",";
      s += std::to_string(dims_[i]);
    }
    return s + "]";
  }

 private:
  template <typename It>
  void assign(It first, It last) {
    const auto n = std::distance(first, last);
    if (n < 1 || n > kMaxRank) {
      throw InvalidInput("tensor rank must be in [1, 4], got " + std::to_string(n));
    }
    rank_ = static_cast<int>(n);
    int i = 0;
    for (auto it = first; it != last; ++it, ++i) {
      if (*it < 1) throw InvalidInput("tensor extents must be positive");
      dims_[i] = *it;
    }
  }

  std::array<int, kMaxRank> dims_{};
  int rank_ = 0;
};

// Dense row-major numeric array with value semantics.
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;
  explicit Tensor(Shape shape, T fill = T{}) : shape_(shape), data_(shape.numel(), fill) {}
  Tensor(Shape shape, std::vector<T> values) : shape_(shape), data_(std::move(values)) {
    if (data_.size() != shape_.numel()) {
      throw InvalidInput("tensor data length " + std::to_string(data_.size()) +
                         " does not match shape " + shape_.str());
    }
  }

  static Tensor scalar(T v) { return Tensor(Shape{1}, std::vector<T>{v}); }

  const Shape& shape() const { return shape_; }
  int rank() const { return shape_.rank(); }
  int dim(int axis) const { return shape_[axis]; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::span<T> values() { return data_; }
  std::span<const T> values() const { return data_; }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  T& at(int i, int j) { return data_[offset(i, j)]; }
  const T& at(int i, int j) const { return data_[offset(i, j)]; }
  T& at(int c, int h, int w) { return data_[offset(c, h, w)]; }
  const T& at(int c, int h, int w) const { return data_[offset(c, h, w)]; }
  T& at(int n, int c, int h, int w) { return data_[offset(n, c, h, w)]; }
  const T& at(int n, int c, int h, int w) const { return data_[offset(n, c, h, w)]; }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

  Tensor reshape(Shape shape) const& {
    Tensor out = *this;
    return std::move(out).reshape(shape);
  }
  Tensor reshape(Shape shape) && {
    if (shape.numel() != data_.size()) {
      throw InvalidInput("cannot reshape " + shape_.str() + " to " + shape.str());
    }
    shape_ = shape;
    return std::move(*this);
  }

  template <typename U>
  Tensor<U> cast() const {
    std::vector<U> out(data_.size());
    std::transform(data_.begin(), data_.end(), out.begin(),
                   [](T v) { return static_cast<U>(v); });
    return Tensor<U>(shape_, std::move(out));
  }

  bool operator==(const Tensor& other) const {
    return shape_ == other.shape_ && data_ == other.data_;
  }

 private:
  std::size_t offset(int i, int j) const {
    return static_cast<std::size_t>(i) * shape_[1] + j;
  }
  std::size_t offset(int c, int h, int w) const {
    return (static_cast<std::size_t>(c) * shape_[1] + h) * shape_[2] + w;
  }
  std::size_t offset(int n, int c, int h, int w) const {
    return ((static_cast<std::size_t>(n) * shape_[1] + c) * shape_[2] + h) * shape_[3] + w;
  }

  Shape shape_;
  std::vector<T> data_;
};

// Copies sample `index` of a batched tensor [N,...] into a tensor [1,...].
template <typename T>
Tensor<T> slice_batch(const Tensor<T>& batch, int index) {
  std::vector<int> dims(batch.shape().dims().begin(), batch.shape().dims().end());
  const std::size_t per = batch.size() / static_cast<std::size_t>(dims[0]);
  dims[0] = 1;
  std::vector<T> values(batch.data() + per * index, batch.data() + per * (index + 1));
  return Tensor<T>(Shape(std::span<const int>(dims)), std::move(values));
}

// Stacks equally shaped tensors along a new leading batch axis.
template <typename T>
Tensor<T> stack(std::span<const Tensor<T>* const> items) {
  if (items.empty()) throw InvalidInput("stack needs at least one tensor");
  const Shape& inner = items.front()->shape();
  if (inner.rank() >= Shape::kMaxRank) throw InvalidInput("stack would exceed rank 4");
  std::vector<int> dims{static_cast<int>(items.size())};
  dims.insert(dims.end(), inner.dims().begin(), inner.dims().end());
  std::vector<T> values;
  values.reserve(inner.numel() * items.size());
  for (const Tensor<T>* t : items) {
    if (!(t->shape() == inner)) throw InvalidInput("stack requires equal shapes");
    values.insert(values.end(), t->values().begin(), t->values().end());
  }
  return Tensor<T>(Shape(std::span<const int>(dims)), std::move(values));
}

}  // namespace fw
