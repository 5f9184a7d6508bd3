#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <set>

#include <gtest/gtest.h>

#include "core/acquisition.hpp"
#include "core/engines.hpp"
#include "core/experiments.hpp"
#include "core/linear.hpp"

using namespace ghostkit;
using namespace ghostkit::engines;

namespace {

experiments::Dataset small_data(std::size_t side = 12, std::size_t masks = 60, double photons = 100.0) {
  experiments::DatasetSpec s;
  s.height = s.width = side;
  s.masks = masks;
  s.photons = photons;
  s.seed = 3;
  s.phantom_seed = 3;
  return experiments::make_dataset(s);
}

MethodConfig small_config(Method m, int epochs = 4) {
  auto c = default_config(m);
  c.train.epochs = epochs;
  c.train.seed = 1;
  c.model.base_features = 3;
  c.model.levels = 2;
  c.model.inr_width = 16;
  c.model.inr_embeddings = 8;
  c.model.inr_hidden_layers = 2;
  c.model.seed = 1;
  return c;
}

}  // namespace

TEST(Methods, NamesRoundTrip) {
  for (auto m : {Method::Ls, Method::Tv, Method::Gidc, Method::N2i, Method::N2g, Method::Inr})
    EXPECT_EQ(parse_method(to_string(m)), m);
  EXPECT_THROW(parse_method("n2v"), Error);
  EXPECT_FALSE(is_learned(Method::Tv));
  EXPECT_TRUE(is_learned(Method::N2g));
}

TEST(Defaults, EpochsPerFamily) {
  EXPECT_EQ(TrainConfig::defaults_for(Method::N2g).epochs, 5000);
  EXPECT_EQ(TrainConfig::defaults_for(Method::Inr).epochs, 7000);
  const auto c = TrainConfig::defaults_for(Method::Gidc);
  EXPECT_DOUBLE_EQ(c.lr, 3e-4);
  EXPECT_DOUBLE_EQ(c.weight_decay, 1e-2);
  EXPECT_DOUBLE_EQ(c.cv_fraction, 0.1);
  EXPECT_EQ(c.cv_repeats, 3);
  EXPECT_EQ(default_config(Method::Inr).model.kind, models::ModelKind::Inr);
}

TEST(Validate, RejectsBadTrainingConfigs) {
  TrainConfig c;
  c.splits = 1;
  EXPECT_THROW(validate(c, Method::N2g), Error);
  EXPECT_NO_THROW(validate(c, Method::Gidc));
  c = TrainConfig{};
  c.cv_fraction = 0.0;
  EXPECT_THROW(validate(c, Method::Gidc), Error);
  c = TrainConfig{};
  c.lr = -1.0;
  EXPECT_THROW(validate(c, Method::Gidc), Error);
}

TEST(Ls, EqualsCglsOnAllData) {
  const auto d = small_data();
  const auto rep = reconstruct(default_config(Method::Ls), d.masks, d.buckets.values);
  EXPECT_EQ(rep.image.pixels, linear::cgls_reconstruct(d.masks, d.buckets.values).pixels);
  EXPECT_FALSE(rep.trace.has_value());
}

TEST(Tv, UsesTvLambda) {
  const auto d = small_data();
  auto c = default_config(Method::Tv);
  c.tv.lambda = 0.5;
  c.train.lambda = 123.0;  // ignored for tv
  const auto rep = reconstruct(c, d.masks, d.buckets.values);
  EXPECT_EQ(rep.image.pixels, variational::tv_min_reconstruct(d.masks, d.buckets.values, c.tv).pixels);
}

TEST(CvSplit, DeterministicFractionAndRepeatDependent) {
  const auto a = cv_split(100, 0.1, 4, 0);
  EXPECT_EQ(a.size(), 10u);
  EXPECT_TRUE(std::is_sorted(a.begin(), a.end()));
  EXPECT_EQ(a, cv_split(100, 0.1, 4, 0));
  EXPECT_NE(a, cv_split(100, 0.1, 4, 1));
  EXPECT_NE(a, cv_split(100, 0.1, 5, 0));
}

namespace {

// N_theta0(r) from the non-CV realizations, de-normalized as in the engine.
std::vector<double> initial_output(const experiments::Dataset& d, const MethodConfig& c, const ReconReport& rep,
                                   std::vector<std::size_t>& keep) {
  const auto cv = cv_split(d.masks.count, c.train.cv_fraction, c.train.seed, 0);
  for (std::size_t i = 0; i < d.masks.count; ++i)
    if (!std::binary_search(cv.begin(), cv.end(), i)) keep.push_back(i);
  const auto sub = linear::extract(d.masks, d.buckets.values, keep);
  const auto r = linear::cgls_reconstruct(sub.masks, sub.buckets, c.cgls);
  const auto model = models::build_model<float>(c.model);
  tensor::Tape<float> tape;
  const auto bound = model.bind(tape);
  tensor::Tensor<float> in({1, r.height, r.width});
  for (std::size_t i = 0; i < r.size(); ++i)
    in.values[i] = float((r.pixels[i] - rep.input_mean) / rep.input_std);
  const auto out = model.forward(tape, bound, tape.constant(in));
  std::vector<double> o(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) o[i] = rep.input_std * out.values()[i] + rep.input_mean;
  return o;
}

}  // namespace

TEST(Gidc, ZeroEpochsReturnsInitialNetworkOutput) {
  const auto d = small_data();
  auto c = small_config(Method::Gidc, 0);
  c.train.solve_offset = false;
  const auto rep = reconstruct(c, d.masks, d.buckets.values);
  ASSERT_TRUE(rep.trace.has_value());
  EXPECT_EQ(rep.trace->best_epoch, 0);
  EXPECT_TRUE(rep.trace->train_loss.empty());
  std::vector<std::size_t> keep;
  const auto o = initial_output(d, c, rep, keep);
  for (std::size_t i = 0; i < o.size(); ++i) EXPECT_NEAR(rep.image.pixels[i], o[i], 1e-5);
}

TEST(Gidc, SolvedOffsetIsConstantAndStationary) {
  const auto d = small_data();
  auto c = small_config(Method::Gidc, 0);
  c.train.lambda = 0.3;  // TV does not see a constant shift
  const auto rep = reconstruct(c, d.masks, d.buckets.values);
  std::vector<std::size_t> keep;
  const auto o = initial_output(d, c, rep, keep);
  const double shift = rep.image.pixels[0] - o[0];
  for (std::size_t i = 0; i < o.size(); ++i) EXPECT_NEAR(rep.image.pixels[i] - o[i], shift, 1e-4);

  // d/dc of 1/2 sum_m (w_m . (x + c) - y_m)^2 vanishes at the reported image.
  double grad = 0.0, scale = 0.0;
  for (auto m : keep) {
    const auto w = d.masks.mask(m);
    double p = 0.0, s1 = 0.0;
    for (std::size_t n = 0; n < w.size(); ++n) {
      p += w[n] * rep.image.pixels[n];
      s1 += w[n];
    }
    grad += (p - d.buckets.values[m]) * s1;
    scale += std::fabs(d.buckets.values[m]) * s1;
  }
  EXPECT_LT(std::fabs(grad), 1e-5 * scale);
}

TEST(N2g, RecordsSplitsAndCrossTerms) {
  const auto d = small_data();
  auto c = small_config(Method::N2g, 3);
  c.train.splits = 4;
  c.train.permutations = 2;
  const auto rep = reconstruct(c, d.masks, d.buckets.values);
  EXPECT_EQ(rep.config.train.splits, 4u);
  EXPECT_EQ(rep.config.train.permutations, 2u);
  EXPECT_EQ(rep.sub_predictions.size(), 8u);
  EXPECT_EQ(rep.loss_terms.size(), 2u * 4u * 3u);
  for (const auto& t : rep.loss_terms) EXPECT_NE(t.input_split, t.target_split);
}

TEST(N2g, OutputIsMeanOfSubPredictions) {
  const auto d = small_data();
  auto c = small_config(Method::N2g, 5);
  c.train.permutations = 2;
  const auto rep = reconstruct(c, d.masks, d.buckets.values);
  for (std::size_t i = 0; i < rep.image.size(); ++i) {
    double mean = 0.0;
    for (const auto& s : rep.sub_predictions) mean += s.pixels[i];
    mean /= double(rep.sub_predictions.size());
    EXPECT_NEAR(rep.image.pixels[i], mean, 1e-12);
  }
}

TEST(N2i, TargetsAreMeansOfOtherSplits) {
  const auto d = small_data();
  auto c = small_config(Method::N2i, 2);
  c.train.splits = 3;
  const auto rep = reconstruct(c, d.masks, d.buckets.values);
  EXPECT_EQ(rep.sub_predictions.size(), 3u);
  EXPECT_EQ(rep.loss_terms.size(), 6u);
}

TEST(Training, CvRealizationsAreHeldOut) {
  const auto d = small_data(12, 100);
  auto c = small_config(Method::N2g, 1);
  const auto rep = reconstruct(c, d.masks, d.buckets.values);
  EXPECT_EQ(rep.cv_indices, cv_split(100, 0.1, c.train.seed, 0));

  // Changing a held-out bucket must not change the training losses.
  auto y = d.buckets.values;
  y[rep.cv_indices.front()] += 50.0;
  const auto rep2 = reconstruct(c, d.masks, y);
  EXPECT_EQ(rep.trace->train_loss, rep2.trace->train_loss);
  EXPECT_NE(rep.trace->cv_loss, rep2.trace->cv_loss);
}

TEST(Training, TraceShapeAndBestEpoch) {
  const auto d = small_data();
  const auto c = small_config(Method::Gidc, 7);
  const auto rep = reconstruct(c, d.masks, d.buckets.values);
  const auto& t = *rep.trace;
  EXPECT_EQ(t.train_loss.size(), 7u);
  EXPECT_EQ(t.cv_loss.size(), 7u);
  EXPECT_GE(t.best_epoch, 0);
  EXPECT_LE(t.best_epoch, 7);
  double best = t.final_cv_loss;
  for (double v : t.cv_loss) best = std::min(best, v);
  EXPECT_DOUBLE_EQ(t.best_cv_loss, best);
  for (double v : t.train_loss) EXPECT_TRUE(std::isfinite(v));
}

TEST(Training, ReproducibleAndThreadIndependent) {
  const auto d = small_data();
  auto c = small_config(Method::N2g, 4);
  c.train.permutations = 2;
  c.train.threads = 1;
  const auto a = reconstruct(c, d.masks, d.buckets.values);
  const auto b = reconstruct(c, d.masks, d.buckets.values);
  c.train.threads = 3;
  const auto t = reconstruct(c, d.masks, d.buckets.values);
  EXPECT_EQ(a.image.pixels, b.image.pixels);
  EXPECT_EQ(a.trace->train_loss, t.trace->train_loss);
  EXPECT_EQ(a.trace->cv_loss, t.trace->cv_loss);
  EXPECT_EQ(a.image.pixels, t.image.pixels);
}

TEST(Training, LossDecreasesOnAverage) {
  const auto d = small_data(12, 80);
  auto c = small_config(Method::Gidc, 60);
  c.train.lr = 3e-3;
  const auto rep = reconstruct(c, d.masks, d.buckets.values);
  EXPECT_LT(rep.trace->final_train_loss, rep.trace->train_loss.front());
}

TEST(Training, EarlyStoppingOffReportsFinalParameters) {
  const auto d = small_data();
  auto c = small_config(Method::Gidc, 5);
  c.train.early_stopping = false;
  const auto rep = reconstruct(c, d.masks, d.buckets.values);
  EXPECT_EQ(rep.trace->best_epoch, 5);
}

TEST(Training, MonitorSeesEveryEvaluation) {
  const auto d = small_data();
  auto c = small_config(Method::Gidc, 3);
  std::vector<int> seen;
  c.train.monitor = [&](int e, std::span<const double> p) {
    seen.push_back(e);
    EXPECT_EQ(p.size(), d.masks.pixels());
  };
  reconstruct(c, d.masks, d.buckets.values);
  EXPECT_EQ(seen, (std::vector<int>{0, 1, 2, 3}));
}

TEST(Training, BudgetExceededRaisesBudgetError) {
  const auto d = small_data();
  auto c = small_config(Method::N2g, 1);
  c.train.memory_budget_bytes = 1024;
  try {
    reconstruct(c, d.masks, d.buckets.values);
    FAIL() << "expected a budget error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Budget);
  }
}

TEST(Training, InrProducesImage) {
  const auto d = small_data();
  const auto rep = reconstruct(small_config(Method::Inr, 3), d.masks, d.buckets.values);
  EXPECT_EQ(rep.image.size(), d.masks.pixels());
  for (double v : rep.image.pixels) EXPECT_TRUE(std::isfinite(v));
}

TEST(Training, ShapeMismatchRejected) {
  const auto d = small_data();
  std::vector<double> y(d.buckets.values.begin(), d.buckets.values.end() - 1);
  EXPECT_THROW(reconstruct(small_config(Method::Gidc), d.masks, y), Error);
}

TEST(LambdaSearch, SinglePointAndTieBreak) {
  const auto d = small_data();
  auto c = default_config(Method::Tv);
  const std::vector<double> one{0.7};
  const auto s = cross_validate_lambda(c, d.masks, d.buckets.values, one);
  EXPECT_EQ(s.best_lambda, 0.7);
  ASSERT_EQ(s.cv_losses.size(), 1u);
  EXPECT_EQ(s.cv_losses[0].size(), std::size_t(c.train.cv_repeats));

  const std::vector<double> same{0.7, 0.7};
  const auto t = cross_validate_lambda(c, d.masks, d.buckets.values, same);
  EXPECT_EQ(t.mean_cv_loss[0], t.mean_cv_loss[1]);
}

TEST(LambdaSearch, PicksModerateTvWeightOnNoisyData) {
  const auto d = small_data(16, 120, 20.0);
  const std::vector<double> grid{1e-4, 1.0, 1e4};
  const auto s = cross_validate_lambda(default_config(Method::Tv), d.masks, d.buckets.values, grid);
  EXPECT_EQ(s.best_lambda, 1.0);
}

TEST(LossProbe, DecompositionHoldsOnSmallCase) {
  const auto d = small_data(8, 40);
  Image out = d.phantom;
  for (auto& v : out.pixels) v = 0.8 * v + 0.05;
  const auto clean = acquisition::forward_project(d.masks, d.phantom);
  const auto p = loss_decomposition_probe(out, d.masks, clean.values, 50.0, 4000, 2);
  EXPECT_NEAR(p.empirical, p.supervised + p.noise_variance, 4 * p.standard_error);
}

TEST(Threads, EnvironmentControlsDefault) {
  ::setenv("GHOSTKIT_THREADS", "3", 1);
  EXPECT_EQ(resolve_threads(0), 3u);
  EXPECT_EQ(resolve_threads(2), 2u);
  ::unsetenv("GHOSTKIT_THREADS");
  EXPECT_EQ(resolve_threads(0), 1u);
}
