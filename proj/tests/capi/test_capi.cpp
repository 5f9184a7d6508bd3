// Exercises the shared library through its public header only.
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "ghostkit/ghostkit.h"

namespace {

std::string tmp(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("gk_capi_" + name)).string();
}

struct Dataset {
  gk_image* phantom = nullptr;
  gk_masks* masks = nullptr;
  gk_buckets* clean = nullptr;
  gk_buckets* noisy = nullptr;

  Dataset(size_t side, size_t count, double photons) {
    EXPECT_EQ(gk_phantom_generate("blobs", side, side, 1, &phantom), GK_OK);
    EXPECT_EQ(gk_masks_generate(count, side, side, 2, &masks), GK_OK);
    EXPECT_EQ(gk_forward_project(masks, phantom, &clean), GK_OK);
    EXPECT_EQ(gk_apply_poisson(clean, photons, 2, &noisy), GK_OK);
  }
  ~Dataset() {
    gk_image_free(phantom);
    gk_masks_free(masks);
    gk_buckets_free(clean);
    gk_buckets_free(noisy);
  }
};

}  // namespace

TEST(CApi, VersionAndStatusNames) {
  EXPECT_STREQ(gk_version(), "1.0.0");
  EXPECT_STREQ(gk_status_name(GK_OK), "ok");
  EXPECT_STREQ(gk_status_name(GK_ERR_BUDGET), "resource budget exceeded");
}

TEST(CApi, NullArgumentsReportInvalidArgument) {
  gk_image* img = nullptr;
  EXPECT_EQ(gk_image_create(0, 4, nullptr, &img), GK_ERR_INVALID_ARGUMENT);
  EXPECT_NE(std::string(gk_last_error()).size(), 0u);
  EXPECT_EQ(gk_image_create(4, 4, nullptr, nullptr), GK_ERR_INVALID_ARGUMENT);
  EXPECT_EQ(gk_reconstruct(nullptr, nullptr, "{}", nullptr), GK_ERR_INVALID_ARGUMENT);
  EXPECT_EQ(gk_image_data(nullptr), nullptr);
  gk_image_free(nullptr);
}

TEST(CApi, ImageCreateCopiesPixels) {
  const double px[6] = {1, 2, 3, 4, 5, 6};
  gk_image* img = nullptr;
  ASSERT_EQ(gk_image_create(2, 3, px, &img), GK_OK);
  size_t h = 0, w = 0;
  ASSERT_EQ(gk_image_shape(img, &h, &w), GK_OK);
  EXPECT_EQ(h, 2u);
  EXPECT_EQ(w, 3u);
  EXPECT_EQ(gk_image_data(img)[4], 5.0);
  gk_image_free(img);
}

TEST(CApi, InfinitePhotonsGiveCleanBuckets) {
  Dataset d(8, 20, INFINITY);
  ASSERT_EQ(gk_buckets_size(d.noisy), 20u);
  for (size_t i = 0; i < 20; ++i) EXPECT_EQ(gk_buckets_data(d.noisy)[i], gk_buckets_data(d.clean)[i]);
  double ratio = -1;
  ASSERT_EQ(gk_noise_fluctuation_ratio(d.noisy, &ratio), GK_OK);
  EXPECT_EQ(ratio, 0.0);
  gk_buckets* bare = nullptr;
  ASSERT_EQ(gk_buckets_create(20, gk_buckets_data(d.noisy), nullptr, &bare), GK_OK);
  EXPECT_EQ(gk_noise_fluctuation_ratio(bare, &ratio), GK_ERR_INVALID_ARGUMENT);
  gk_buckets_free(bare);
}

TEST(CApi, ShapeMismatchIsReported) {
  gk_image* img = nullptr;
  gk_masks* masks = nullptr;
  gk_buckets* b = nullptr;
  ASSERT_EQ(gk_image_create(4, 5, nullptr, &img), GK_OK);
  ASSERT_EQ(gk_masks_generate(3, 4, 4, 1, &masks), GK_OK);
  EXPECT_EQ(gk_forward_project(masks, img, &b), GK_ERR_SHAPE);
  EXPECT_EQ(b, nullptr);
  gk_image_free(img);
  gk_masks_free(masks);
}

TEST(CApi, ReconstructReportAndMetrics) {
  Dataset d(12, 60, 100.0);
  gk_report* rep = nullptr;
  const char* cfg = R"({"method":"n2g","epochs":3,"splits":3,"permutations":2,"model":{"base_features":3,"levels":2}})";
  ASSERT_EQ(gk_reconstruct(d.masks, d.noisy, cfg, &rep), GK_OK) << gk_last_error();
  ASSERT_EQ(gk_report_attach_metrics(rep, d.phantom), GK_OK);
  char* json = nullptr;
  ASSERT_EQ(gk_report_json(rep, &json), GK_OK);
  const std::string text = json;
  gk_string_free(json);
  EXPECT_NE(text.find("\"permutations\": 2"), std::string::npos);
  EXPECT_NE(text.find("\"psnr\""), std::string::npos);
  EXPECT_NE(text.find("\"best_epoch\""), std::string::npos);

  char* csv = nullptr;
  ASSERT_EQ(gk_report_trace_csv(rep, &csv), GK_OK);
  EXPECT_EQ(std::string(csv).rfind("epoch,train_loss,cv_loss\n", 0), 0u);
  gk_string_free(csv);

  const gk_image* img = gk_report_image(rep);
  size_t h = 0, w = 0;
  gk_image_shape(img, &h, &w);
  EXPECT_EQ(h, 12u);
  EXPECT_GE(gk_report_wall_seconds(rep), 0.0);

  const auto ckpt = tmp("ckpt.gitk");
  EXPECT_EQ(gk_report_save_checkpoint(rep, ckpt.c_str()), GK_OK);
  EXPECT_GT(std::filesystem::file_size(ckpt), 100u);
  std::filesystem::remove(ckpt);
  gk_report_free(rep);
}

TEST(CApi, ReconstructRejectsBadConfig) {
  Dataset d(8, 20, 100.0);
  gk_report* rep = nullptr;
  EXPECT_EQ(gk_reconstruct(d.masks, d.noisy, "{not json", &rep), GK_ERR_INVALID_ARGUMENT);
  EXPECT_EQ(gk_reconstruct(d.masks, d.noisy, R"({"method":"bogus"})", &rep), GK_ERR_INVALID_ARGUMENT);
  EXPECT_EQ(gk_reconstruct(d.masks, d.noisy, R"({"method":"ls","wat":1})", &rep), GK_ERR_INVALID_ARGUMENT);
  EXPECT_NE(std::string(gk_last_error()).find("wat"), std::string::npos);
  EXPECT_EQ(gk_reconstruct(d.masks, d.noisy, R"({"method":"n2g","epochs":1,"memory_budget_mb":0.001})", &rep),
            GK_ERR_BUDGET);
  EXPECT_EQ(rep, nullptr);
}

TEST(CApi, LsReportHasNoCheckpointOrTrace) {
  Dataset d(8, 40, 100.0);
  gk_report* rep = nullptr;
  ASSERT_EQ(gk_reconstruct(d.masks, d.noisy, R"({"method":"ls"})", &rep), GK_OK);
  char* csv = nullptr;
  ASSERT_EQ(gk_report_trace_csv(rep, &csv), GK_OK);
  EXPECT_STREQ(csv, "");
  gk_string_free(csv);
  EXPECT_EQ(gk_report_save_checkpoint(rep, tmp("none.gitk").c_str()), GK_ERR_INVALID_ARGUMENT);
  gk_report_free(rep);
}

TEST(CApi, EvaluateIdenticalImages) {
  Dataset d(16, 4, 100.0);
  gk_metrics m{};
  char* frc = nullptr;
  ASSERT_EQ(gk_evaluate(d.phantom, d.phantom, 0, &m, &frc), GK_OK);
  EXPECT_NEAR(m.ssim, 1.0, 1e-12);
  EXPECT_TRUE(std::isinf(m.psnr));
  EXPECT_EQ(m.mse, 0.0);
  EXPECT_EQ(std::string(frc).rfind("ring,frequency,correlation,samples,half_bit_threshold\n", 0), 0u);
  gk_string_free(frc);
  ASSERT_EQ(gk_evaluate(d.phantom, d.phantom, 1, &m, nullptr), GK_OK);
}

TEST(CApi, ContainersRoundTrip) {
  Dataset d(6, 5, 10.0);
  const auto pi = tmp("img.gitk"), pm = tmp("masks.gitk"), pb = tmp("b.gitk");
  ASSERT_EQ(gk_image_save(d.phantom, pi.c_str(), R"({"k":1})"), GK_OK);
  ASSERT_EQ(gk_masks_save(d.masks, pm.c_str(), nullptr), GK_OK);
  ASSERT_EQ(gk_buckets_save(d.noisy, pb.c_str(), nullptr), GK_OK);
  gk_image* img = nullptr;
  gk_masks* masks = nullptr;
  gk_buckets* b = nullptr;
  ASSERT_EQ(gk_image_load(pi.c_str(), &img), GK_OK);
  ASSERT_EQ(gk_masks_load(pm.c_str(), &masks), GK_OK);
  ASSERT_EQ(gk_buckets_load(pb.c_str(), &b), GK_OK);
  EXPECT_EQ(std::memcmp(gk_image_data(img), gk_image_data(d.phantom), 36 * sizeof(double)), 0);
  EXPECT_EQ(std::memcmp(gk_masks_data(masks), gk_masks_data(d.masks), 5 * 36 * sizeof(double)), 0);
  EXPECT_EQ(std::memcmp(gk_buckets_data(b), gk_buckets_data(d.noisy), 5 * sizeof(double)), 0);
  EXPECT_EQ(gk_buckets_clean(b), nullptr);
  // Wrong rank for the requested kind.
  gk_image* wrong = nullptr;
  EXPECT_EQ(gk_image_load(pm.c_str(), &wrong), GK_ERR_SHAPE);
  EXPECT_EQ(gk_image_load(tmp("missing.gitk").c_str(), &wrong), GK_ERR_IO);
  gk_image_free(img);
  gk_masks_free(masks);
  gk_buckets_free(b);
  for (const auto& p : {pi, pm, pb}) std::filesystem::remove(p);
}

TEST(CApi, SweepAndGridsearchJson) {
  char* js = nullptr;
  char* csv = nullptr;
  const char* sweep =
      R"({"data":{"size":12,"masks":40,"seed":1},"photon_levels":[10,"inf"],"repeats":1,"methods":["ls"]})";
  ASSERT_EQ(gk_sweep(sweep, &js, &csv), GK_OK) << gk_last_error();
  EXPECT_NE(std::string(js).find("\"psnr_mean\""), std::string::npos);
  int lines = 0;
  for (const char* p = csv; *p; ++p) lines += *p == '\n';
  EXPECT_EQ(lines, 3);  // header + 2 levels x 1 method
  gk_string_free(js);
  gk_string_free(csv);

  Dataset d(12, 60, 50.0);
  ASSERT_EQ(gk_gridsearch(d.masks, d.noisy, R"({"method":{"method":"tv"},"lambdas":[0.5]})", &js), GK_OK);
  EXPECT_NE(std::string(js).find("\"best_lambda\": 0.5"), std::string::npos);
  gk_string_free(js);
  EXPECT_EQ(gk_gridsearch(d.masks, d.noisy, R"({"lambdas":[0.5]})", &js), GK_ERR_INVALID_ARGUMENT);
}

TEST(CApi, PgmExportReportsScale) {
  const double px[4] = {-1, 0, 1, 3};
  gk_image* img = nullptr;
  ASSERT_EQ(gk_image_create(2, 2, px, &img), GK_OK);
  double lo = 0, hi = 0;
  const auto path = tmp("x.pgm");
  ASSERT_EQ(gk_image_write_pgm(img, path.c_str(), &lo, &hi), GK_OK);
  EXPECT_EQ(lo, -1.0);
  EXPECT_EQ(hi, 3.0);
  EXPECT_EQ(gk_image_write_pgm(img, "/nonexistent/dir/x.pgm", nullptr, nullptr), GK_ERR_IO);
  std::filesystem::remove(path);
  gk_image_free(img);
}
