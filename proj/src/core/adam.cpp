#include "core/adam.hpp"

#include <cmath>

namespace ghostkit::tensor {

template <typename T>
Adam<T>::Adam(AdamConfig config, const std::vector<Tensor<T>>& params) : config_(config) {
  require(config.lr >= 0 && config.weight_decay >= 0 && config.eps > 0, ErrorCode::InvalidArgument,
          "adam: lr, weight decay must be >= 0 and eps > 0");
  require(config.beta1 >= 0 && config.beta1 < 1 && config.beta2 >= 0 && config.beta2 < 1,
          ErrorCode::InvalidArgument, "adam: betas must lie in [0, 1)");
  for (const auto& p : params) {
    m_.emplace_back(p.size(), T(0));
    v_.emplace_back(p.size(), T(0));
  }
}

template <typename T>
void Adam<T>::step(std::vector<Tensor<T>>& params, std::span<const std::vector<T>> grads) {
  require(params.size() == m_.size() && grads.size() == m_.size(), ErrorCode::Shape,
          "adam: parameter/gradient count does not match optimizer state");
  ++t_;
  const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  const double decay = 1.0 - config_.lr * config_.weight_decay;
  const double b1 = config_.beta1, b2 = config_.beta2;
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params[i].values;
    const auto& g = grads[i];
    require(p.size() == m_[i].size(), ErrorCode::Shape, "adam: parameter resized between steps");
    require(g.empty() || g.size() == p.size(), ErrorCode::Shape,
            "adam: gradient " + std::to_string(i) + " has wrong length");
    auto& m = m_[i];
    auto& v = v_[i];
    for (std::size_t j = 0; j < p.size(); ++j) {
      const double gj = g.empty() ? 0.0 : static_cast<double>(g[j]);
      double pj = static_cast<double>(p[j]) * decay;
      const double mj = b1 * m[j] + (1.0 - b1) * gj;
      const double vj = b2 * v[j] + (1.0 - b2) * gj * gj;
      m[j] = static_cast<T>(mj);
      v[j] = static_cast<T>(vj);
      pj -= config_.lr * (mj / bc1) / (std::sqrt(vj / bc2) + config_.eps);
      p[j] = static_cast<T>(pj);
    }
  }
}

template class Adam<float>;
template class Adam<double>;

}  // namespace ghostkit::tensor
