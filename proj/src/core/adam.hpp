#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "core/tensor.hpp"

namespace ghostkit::tensor {

struct AdamConfig {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  // Decoupled: applied to the parameters, never folded into the gradient.
  double weight_decay = 1e-2;
};

// Bias-corrected Adam with decoupled weight decay (AdamW).
template <typename T>
class Adam {
 public:
  Adam(AdamConfig config, const std::vector<Tensor<T>>& params);

  // One update. grads[i] may be empty, which counts as a zero gradient.
  void step(std::vector<Tensor<T>>& params, std::span<const std::vector<T>> grads);

  std::int64_t steps() const { return t_; }
  const AdamConfig& config() const { return config_; }
  const std::vector<std::vector<T>>& first_moment() const { return m_; }
  const std::vector<std::vector<T>>& second_moment() const { return v_; }

 private:
  AdamConfig config_;
  std::vector<std::vector<T>> m_;
  std::vector<std::vector<T>> v_;
  std::int64_t t_ = 0;
};

extern template class Adam<float>;
extern template class Adam<double>;

}  // namespace ghostkit::tensor
