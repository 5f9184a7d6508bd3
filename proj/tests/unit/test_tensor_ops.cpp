#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "core/ops.hpp"
#include "support/gradcheck.hpp"

using namespace ghostkit;
using namespace ghostkit::tensor;

class OpGradient : public ::testing::TestWithParam<std::size_t> {};

TEST_P(OpGradient, MatchesCentralDifferencesOn20RandomCases) {
  const auto cases = gktest::op_cases();
  const auto& c = cases[GetParam()];
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const double err = c.run(seed);
    EXPECT_LT(err, 1e-4) << c.name << " seed " << seed;
  }
}

INSTANTIATE_TEST_SUITE_P(AllOps, OpGradient, ::testing::Range<std::size_t>(0, gktest::op_cases().size()),
                         [](const ::testing::TestParamInfo<std::size_t>& info) {
                           return gktest::op_cases()[info.param].name;
                         });

TEST(Conv2d, MatchesDirectConvolution) {
  Rng rng(3);
  auto x = gktest::random_tensor({2, 5, 4}, rng);
  auto k = gktest::random_tensor({3, 2, 3, 3}, rng);
  auto b = gktest::random_tensor({3}, rng);
  Tape<double> tape;
  const auto out = conv2d(tape.leaf(x), tape.leaf(k), tape.leaf(b));
  ASSERT_EQ(out.shape(), (Shape{3, 5, 4}));
  for (std::size_t o = 0; o < 3; ++o)
    for (int y = 0; y < 5; ++y)
      for (int xx = 0; xx < 4; ++xx) {
        double acc = b.values[o];
        for (std::size_t c = 0; c < 2; ++c)
          for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
              const int yy = y + dy, xc = xx + dx;
              if (yy < 0 || yy >= 5 || xc < 0 || xc >= 4) continue;
              acc += k.values[((o * 2 + c) * 3 + (dy + 1)) * 3 + (dx + 1)] * x.values[(c * 5 + yy) * 4 + xc];
            }
        EXPECT_NEAR(out.values()[(o * 5 + y) * 4 + xx], acc, 1e-12);
      }
}

TEST(Conv2d, RejectsMismatchedChannels) {
  Tape<double> tape;
  auto x = tape.leaf(Tensor<double>({2, 4, 4}));
  auto k = tape.leaf(Tensor<double>({1, 3, 3, 3}));
  auto b = tape.leaf(Tensor<double>({1}));
  EXPECT_THROW(conv2d(x, k, b), Error);
}

TEST(MaxPool, RoutesGradientToFirstMaximumOnTies) {
  Tape<double> tape;
  auto x = tape.leaf(Tensor<double>({1, 2, 2}, {5.0, 5.0, 5.0, 1.0}));
  const auto out = maxpool2x2(x);
  ASSERT_EQ(out.shape(), (Shape{1, 1, 1}));
  EXPECT_EQ(out.values()[0], 5.0);
  tape.backward(sum(out));
  const auto g = tape.grad(x);
  EXPECT_EQ(g[0], 1.0);
  EXPECT_EQ(g[1], 0.0);
  EXPECT_EQ(g[2], 0.0);
  EXPECT_EQ(g[3], 0.0);
}

TEST(MaxPool, OddEdgesReplicate) {
  Tape<double> tape;
  auto x = tape.leaf(Tensor<double>({1, 3, 3}, {1, 2, 3, 4, 5, 6, 7, 8, 9}));
  const auto out = maxpool2x2(x);
  ASSERT_EQ(out.shape(), (Shape{1, 2, 2}));
  const std::vector<double> expect{5, 6, 8, 9};
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(out.values()[i], expect[i]);
}

TEST(Upsample, RepeatsEachPixelTwice) {
  Tape<double> tape;
  auto x = tape.leaf(Tensor<double>({1, 1, 2}, {1.0, 2.0}));
  const auto out = upsample_nearest2x(x);
  ASSERT_EQ(out.shape(), (Shape{1, 2, 4}));
  const std::vector<double> expect{1, 1, 2, 2, 1, 1, 2, 2};
  for (std::size_t i = 0; i < expect.size(); ++i) EXPECT_EQ(out.values()[i], expect[i]);
}

TEST(SmoothedTv, ClosedFormOnStep) {
  // Single vertical edge of height 1 across 3 rows: 3 jumps plus the eps floor elsewhere.
  Tensor<double> img({1, 3, 4});
  for (std::size_t y = 0; y < 3; ++y)
    for (std::size_t x = 2; x < 4; ++x) img.values[y * 4 + x] = 1.0;
  const double eps = 1e-3;
  Tape<double> tape;
  const double tv = smoothed_tv_loss(tape.constant(img), eps).item();
  EXPECT_NEAR(tv, 3 * std::sqrt(1.0 + eps * eps) + 9 * eps, 1e-12);
}

TEST(HalfSquaredError, Value) {
  Tape<double> tape;
  const std::vector<double> target{1.0, -1.0, 0.5};
  const auto v = half_squared_error<double>(tape.constant(Tensor<double>({3}, {2.0, 1.0, 0.5})), target);
  EXPECT_DOUBLE_EQ(v.item(), 0.5 * (1.0 + 4.0));
}

TEST(Tape, GradientOfSumEqualsSumOfGradients) {
  Rng rng(11);
  const auto x0 = gktest::random_tensor({1, 5, 5}, rng);
  const auto k0 = gktest::random_tensor({2, 1, 3, 3}, rng);
  const auto b0 = gktest::random_tensor({2}, rng);
  auto branch = [](Var<double> x, Var<double> k, Var<double> b, int which) {
    const auto h = conv2d(x, k, b);
    return which == 0 ? sum(sin(h)) : smoothed_tv_loss(leaky_relu(h, 0.2), 1e-3);
  };
  std::vector<double> separate(x0.size(), 0.0);
  for (int which = 0; which < 2; ++which) {
    Tape<double> t;
    auto x = t.leaf(x0);
    auto l = branch(x, t.leaf(k0), t.leaf(b0), which);
    t.backward(l);
    for (std::size_t i = 0; i < separate.size(); ++i) separate[i] += t.grad(x)[i];
  }
  Tape<double> t;
  auto x = t.leaf(x0);
  auto k = t.leaf(k0);
  auto b = t.leaf(b0);
  auto l = add(branch(x, k, b, 0), branch(x, k, b, 1));
  t.backward(l);
  for (std::size_t i = 0; i < separate.size(); ++i) EXPECT_NEAR(t.grad(x)[i], separate[i], 1e-12);
}

TEST(Tape, BackwardTwiceIsRejected) {
  Tape<double> t;
  auto x = t.leaf(Tensor<double>({2}, {1.0, 2.0}));
  auto l = sum(x);
  t.backward(l);
  EXPECT_THROW(t.backward(l), Error);
}

TEST(Tape, ForwardStaysFiniteForLargeInputs) {
  Tape<float> t;
  Tensor<float> x({1, 4, 4});
  for (std::size_t i = 0; i < x.size(); ++i) x.values[i] = float(i) * 1e3f;
  const auto y = sin(leaky_relu(t.leaf(x), 0.1));
  for (float v : y.values()) EXPECT_TRUE(std::isfinite(v));
}

TEST(Tensor, ShapeMismatchThrows) {
  EXPECT_THROW(Tensor<double>({2, 3}, std::vector<double>(5)), Error);
  Tape<double> t;
  EXPECT_THROW(add(t.leaf(Tensor<double>({2})), t.leaf(Tensor<double>({3}))), Error);
}
