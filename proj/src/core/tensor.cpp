#include "core/tensor.hpp"

#include <algorithm>
#include <cmath>

namespace ghostkit::tensor {

std::size_t numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string to_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

template <typename T>
Tensor<T>::Tensor(Shape s, std::vector<T> v) : shape(std::move(s)), values(std::move(v)) {
  require(numel(shape) == values.size(), ErrorCode::Shape,
          "tensor of shape " + to_string(shape) + " given " + std::to_string(values.size()) +
              " values");
}

template <typename T>
Var<T> Tape<T>::leaf(Tensor<T> value, bool requires_grad) {
  Node node;
  node.shape = std::move(value.shape);
  node.value = std::move(value.values);
  node.requires_grad = requires_grad;
  nodes_.push_back(std::move(node));
  return Var<T>{this, nodes_.size() - 1};
}

template <typename T>
Var<T> Tape<T>::record(Shape shape, std::vector<T> values, std::vector<std::size_t> inputs,
                       BackwardFn backward) {
  require(numel(shape) == values.size(), ErrorCode::Shape,
          "operation output of shape " + to_string(shape) + " has " +
              std::to_string(values.size()) + " values");
  Node node;
  node.shape = std::move(shape);
  node.value = std::move(values);
  for (auto in : inputs) {
    require(in < nodes_.size(), ErrorCode::InvalidArgument, "operation input not on this tape");
    node.requires_grad = node.requires_grad || nodes_[in].requires_grad;
  }
  node.inputs = std::move(inputs);
  if (node.requires_grad) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var<T>{this, nodes_.size() - 1};
}

template <typename T>
std::span<T> Tape<T>::grad_buffer(std::size_t id) {
  auto& node = nodes_[id];
  if (node.grad.empty()) node.grad.assign(node.value.size(), T(0));
  return node.grad;
}

template <typename T>
void Tape<T>::backward(Var<T> root) {
  require(root.tape == this, ErrorCode::InvalidArgument, "backward root belongs to another tape");
  require(!backward_done_, ErrorCode::InvalidArgument, "backward already run on this tape");
  require(nodes_[root.id].value.size() == 1, ErrorCode::Shape,
          "backward root must be a scalar, got " + to_string(nodes_[root.id].shape));
  backward_done_ = true;
  visited_ = 0;
  grad_buffer(root.id)[0] = T(1);
  for (std::size_t id = root.id + 1; id-- > 0;) {
    auto& node = nodes_[id];
    if (!node.backward || node.grad.empty()) continue;
    node.backward(*this, id);
    ++visited_;
  }
}

template <typename T>
std::size_t Tape<T>::value_bytes() const {
  std::size_t bytes = 0;
  for (const auto& n : nodes_) bytes += n.value.size() * sizeof(T);
  return bytes;
}

template struct Tensor<float>;
template struct Tensor<double>;
template class Tape<float>;
template class Tape<double>;

}  // namespace ghostkit::tensor
