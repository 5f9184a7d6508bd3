#include <cmath>

#include <gtest/gtest.h>

#include "core/adam.hpp"

using namespace ghostkit::tensor;

namespace {

std::vector<Tensor<double>> scalar(double v) { return {Tensor<double>({1}, {v})}; }

}  // namespace

TEST(Adam, ZeroGradientNoDecayLeavesParameters) {
  AdamConfig c;
  c.weight_decay = 0.0;
  auto p = scalar(0.7);
  Adam<double> opt(c, p);
  const std::vector<std::vector<double>> g{{0.0}};
  for (int i = 0; i < 5; ++i) opt.step(p, g);
  EXPECT_EQ(p[0].values[0], 0.7);
}

TEST(Adam, FirstStepMovesByLearningRateTimesSign) {
  for (double g0 : {3.0, -0.02, 150.0}) {
    AdamConfig c;
    c.weight_decay = 0.0;
    auto p = scalar(1.0);
    Adam<double> opt(c, p);
    opt.step(p, std::vector<std::vector<double>>{{g0}});
    EXPECT_NEAR(p[0].values[0], 1.0 - c.lr * (g0 > 0 ? 1.0 : -1.0), 1e-9) << g0;
  }
}

TEST(Adam, ConstantGradientKeepsUnitStep) {
  // With bias correction, m_hat = g and v_hat = g^2 for a constant gradient.
  AdamConfig c;
  c.weight_decay = 0.0;
  c.lr = 0.1;
  auto p = scalar(0.0);
  Adam<double> opt(c, p);
  for (int i = 0; i < 10; ++i) opt.step(p, std::vector<std::vector<double>>{{2.0}});
  EXPECT_NEAR(p[0].values[0], -1.0, 1e-6);
}

TEST(Adam, DecoupledWeightDecayScalesParameters) {
  AdamConfig c;
  c.weight_decay = 1e-2;
  auto p = scalar(2.5);
  Adam<double> opt(c, p);
  opt.step(p, std::vector<std::vector<double>>{{0.0}});
  EXPECT_NEAR(p[0].values[0], 2.5 * (1.0 - c.lr * c.weight_decay), 1e-15);
}

TEST(Adam, EmptyGradientCountsAsZero) {
  AdamConfig c;
  c.weight_decay = 0.0;
  std::vector<Tensor<double>> p{Tensor<double>({2}, {1.0, 2.0}), Tensor<double>({1}, {3.0})};
  Adam<double> opt(c, p);
  opt.step(p, std::vector<std::vector<double>>{{}, {1.0}});
  EXPECT_EQ(p[0].values[0], 1.0);
  EXPECT_EQ(p[0].values[1], 2.0);
  EXPECT_NEAR(p[1].values[0], 3.0 - c.lr, 1e-9);
  EXPECT_EQ(opt.steps(), 1);
}

TEST(Adam, ReferenceTrajectory) {
  // Hand-rolled AdamW recursion as the oracle.
  AdamConfig c;
  c.lr = 0.05;
  auto p = scalar(1.0);
  Adam<double> opt(c, p);
  double x = 1.0, m = 0.0, v = 0.0;
  for (int t = 1; t <= 25; ++t) {
    const double g = 2.0 * x - std::sin(double(t));
    opt.step(p, std::vector<std::vector<double>>{{g}});
    x *= 1.0 - c.lr * c.weight_decay;
    m = c.beta1 * m + (1 - c.beta1) * g;
    v = c.beta2 * v + (1 - c.beta2) * g * g;
    const double mh = m / (1 - std::pow(c.beta1, t)), vh = v / (1 - std::pow(c.beta2, t));
    x -= c.lr * mh / (std::sqrt(vh) + c.eps);
    EXPECT_NEAR(p[0].values[0], x, 1e-12) << t;
  }
}
