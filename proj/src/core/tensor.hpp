#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "core/error.hpp"

namespace ghostkit::tensor {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string to_string(const Shape& shape);

// Dense row-major array. T is float for training and double for gradient
// verification.
template <typename T>
struct Tensor {
  Shape shape;
  std::vector<T> values;

  Tensor() = default;
  Tensor(Shape s, std::vector<T> v);
  explicit Tensor(Shape s) : shape(std::move(s)), values(numel(shape), T(0)) {}

  static Tensor filled(Shape s, T value) {
    Tensor t(std::move(s));
    std::fill(t.values.begin(), t.values.end(), value);
    return t;
  }

  std::size_t size() const { return values.size(); }
  std::size_t rank() const { return shape.size(); }
};

template <typename T>
class Tape;

// A tensor value recorded on a tape.
template <typename T>
struct Var {
  Tape<T>* tape = nullptr;
  std::size_t id = 0;

  const Shape& shape() const;
  std::span<const T> values() const;
  std::size_t size() const { return values().size(); }
  // Scalar value of a one-element tensor, widened to double.
  double item() const;
};

// Records operations in creation order; since inputs must already exist when
// an operation is recorded, creation order is a topological order.
template <typename T>
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var<T> leaf(Tensor<T> value, bool requires_grad = true);
  Var<T> constant(Tensor<T> value) { return leaf(std::move(value), false); }

  // Appends an operation node. The backward rule is invoked once, after the
  // node's own gradient is complete, and accumulates into its inputs.
  Var<T> record(Shape shape, std::vector<T> values, std::vector<std::size_t> inputs,
                BackwardFn backward);

  // Reverse sweep from a scalar root. May be called once per tape.
  void backward(Var<T> root);

  const Shape& shape(std::size_t id) const { return nodes_[id].shape; }
  std::span<const T> value(std::size_t id) const { return nodes_[id].value; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }

  // Gradient of node `id`; empty span when no gradient reached it.
  std::span<const T> grad(std::size_t id) const { return nodes_[id].grad; }
  std::span<const T> grad(Var<T> v) const { return grad(v.id); }
  // Mutable, zero-initialized gradient buffer, allocated on first use.
  std::span<T> grad_buffer(std::size_t id);

  std::size_t size() const { return nodes_.size(); }
  // Bytes held by node values (gradients excluded).
  std::size_t value_bytes() const;

  // Count of backward rules executed by the last backward().
  std::size_t visited() const { return visited_; }

 private:
  struct Node {
    Shape shape;
    std::vector<T> value;
    std::vector<T> grad;
    std::vector<std::size_t> inputs;
    BackwardFn backward;
    bool requires_grad = false;
  };

  std::vector<Node> nodes_;
  bool backward_done_ = false;
  std::size_t visited_ = 0;
};

template <typename T>
const Shape& Var<T>::shape() const {
  return tape->shape(id);
}

template <typename T>
std::span<const T> Var<T>::values() const {
  return tape->value(id);
}

template <typename T>
double Var<T>::item() const {
  const auto v = values();
  require(v.size() == 1, ErrorCode::Shape, "item() on tensor of shape " + to_string(shape()));
  return static_cast<double>(v[0]);
}

extern template struct Tensor<float>;
extern template struct Tensor<double>;
extern template class Tape<float>;
extern template class Tape<double>;

}  // namespace ghostkit::tensor
