#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include <gtest/gtest.h>

#include "core/serialize.hpp"

using namespace ghostkit;
using namespace ghostkit::serialize;

TEST(Numbers, NonFiniteRoundTripThroughStrings) {
  const double inf = std::numeric_limits<double>::infinity();
  EXPECT_EQ(number(inf), json("inf"));
  EXPECT_EQ(number(-inf), json("-inf"));
  EXPECT_EQ(number(1.5), json(1.5));
  EXPECT_EQ(read_number(json("inf")), inf);
  EXPECT_TRUE(std::isnan(read_number(json("nan"))));
  EXPECT_THROW(read_number(json("many")), Error);
}

TEST(MethodConfigJson, RoundTrip) {
  auto c = engines::default_config(engines::Method::N2g);
  c.train.epochs = 123;
  c.train.splits = 5;
  c.train.permutations = 6;
  c.train.lambda = 0.25;
  c.model.base_features = 7;
  c.tv.iterations = 99;
  const auto j = to_json(c);
  const auto back = method_config(j);
  EXPECT_EQ(to_json(back), j);
  EXPECT_EQ(back.train.permutations, 6u);
}

TEST(MethodConfigJson, DefaultsAndModelSeedFollowsTrainingSeed) {
  const auto c = method_config(json{{"method", "gidc"}, {"seed", 17}});
  EXPECT_EQ(c.train.epochs, 5000);
  EXPECT_EQ(c.model.seed, 17u);
  const auto inr = method_config(json{{"method", "inr"}});
  EXPECT_EQ(inr.train.epochs, 7000);
  EXPECT_EQ(inr.model.kind, models::ModelKind::Inr);
}

TEST(MethodConfigJson, RejectsUnknownKeysAndBadValues) {
  EXPECT_THROW(method_config(json{{"method", "n2g"}, {"epoch", 3}}), Error);
  EXPECT_THROW(method_config(json{{"method", "n2g"}, {"model", {{"depth", 3}}}}), Error);
  EXPECT_THROW(method_config(json{{"method", "magic"}}), Error);
  EXPECT_THROW(method_config(json{{"epochs", 3}}), Error);
  EXPECT_THROW(method_config(json{{"method", "n2g"}, {"splits", 1}}), Error);
  EXPECT_THROW(method_config(json{{"method", "n2g"}, {"epochs", -1}}), Error);
  EXPECT_THROW(method_config(json{{"method", "n2g"}, {"epochs", 2.5}}), Error);
  EXPECT_THROW(method_config(json{{"method", "inr"}, {"model", {{"kind", "unet"}}}}), Error);
}

TEST(MethodConfigJson, MemoryBudgetInMegabytes) {
  const auto c = method_config(json{{"method", "gidc"}, {"memory_budget_mb", 2}});
  EXPECT_EQ(c.train.memory_budget_bytes, 2u * 1048576u);
}

TEST(TraceCsv, HeaderRowsAndFinalLine) {
  engines::TrainTrace t;
  t.train_loss = {3.0, 2.0};
  t.cv_loss = {1.5, 1.25};
  t.final_train_loss = 1.0;
  t.final_cv_loss = 1.125;
  const auto csv = trace_csv(t);
  EXPECT_EQ(csv, "epoch,train_loss,cv_loss\n0,3,1.5\n1,2,1.25\n2,1,1.125\n");
}

TEST(DatasetSpecJson, SizeShortcutAndInfPhotons) {
  const auto s = dataset_spec(json{{"size", 32}, {"photons", "inf"}, {"masks", 100}});
  EXPECT_EQ(s.height, 32u);
  EXPECT_EQ(s.width, 32u);
  EXPECT_TRUE(std::isinf(s.photons));
  EXPECT_EQ(dataset_spec(to_json(s)).masks, 100u);
  EXPECT_THROW(dataset_spec(json{{"pixels", 3}}), Error);
}

TEST(SweepConfigJson, MethodsAsNamesOrObjects) {
  const auto c = sweep_config(json{{"photon_levels", {1, 10}},
                                   {"methods", {"ls", {{"method", "tv"}, {"tv", {{"lambda", 0.3}}}}}},
                                   {"repeats", 2}});
  ASSERT_EQ(c.methods.size(), 2u);
  EXPECT_EQ(c.methods[1].tv.lambda, 0.3);
  EXPECT_EQ(c.photon_levels, (std::vector<double>{1, 10}));
  EXPECT_THROW(sweep_config(json{{"methods", json::array()}}), Error);
}

TEST(Pgm, SixteenBitMinMaxScaled) {
  Image img(2, 3, std::vector<double>{0.5, 1.0, 1.5, 2.0, 2.5, 3.0});
  const auto path = (std::filesystem::temp_directory_path() / "gk_unit.pgm").string();
  const auto [lo, hi] = write_pgm16(img, path);
  EXPECT_EQ(lo, 0.5);
  EXPECT_EQ(hi, 3.0);
  std::ifstream in(path, std::ios::binary);
  const std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::string header = "P5\n3 2\n65535\n";
  ASSERT_EQ(data.substr(0, header.size()), header);
  ASSERT_EQ(data.size(), header.size() + 12);
  auto px = [&](std::size_t i) {
    return (unsigned(std::uint8_t(data[header.size() + 2 * i])) << 8) | std::uint8_t(data[header.size() + 2 * i + 1]);
  };
  EXPECT_EQ(px(0), 0u);
  EXPECT_EQ(px(5), 65535u);
  EXPECT_EQ(px(2), 26214u);  // round(0.4 * 65535)
  std::filesystem::remove(path);
}
