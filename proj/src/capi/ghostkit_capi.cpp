#include "ghostkit/ghostkit.h"

#include <cstring>
#include <new>
#include <string>

#include "core/acquisition.hpp"
#include "core/engines.hpp"
#include "core/error.hpp"
#include "core/experiments.hpp"
#include "core/gitk.hpp"
#include "core/metrics.hpp"
#include "core/serialize.hpp"

using namespace ghostkit;
using nlohmann::json;

struct gk_image {
  Image image;
};
struct gk_masks {
  MaskSet masks;
};
struct gk_buckets {
  BucketVector buckets;
};
struct gk_report {
  engines::ReconReport report;
  gk_image image;
};

namespace {

thread_local std::string last_error;

gk_status to_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return GK_ERR_INVALID_ARGUMENT;
    case ErrorCode::Shape: return GK_ERR_SHAPE;
    case ErrorCode::Numeric: return GK_ERR_NUMERIC;
    case ErrorCode::Io: return GK_ERR_IO;
    case ErrorCode::Budget: return GK_ERR_BUDGET;
  }
  return GK_ERR_INTERNAL;
}

template <typename F>
gk_status guarded(F&& fn) {
  last_error.clear();
  try {
    fn();
    return GK_OK;
  } catch (const Error& e) {
    last_error = e.what();
    return to_status(e.code());
  } catch (const json::exception& e) {
    last_error = std::string("invalid JSON: ") + e.what();
    return GK_ERR_INVALID_ARGUMENT;
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return GK_ERR_BUDGET;
  } catch (const std::exception& e) {
    last_error = e.what();
    return GK_ERR_INTERNAL;
  }
}

template <typename T>
void need(const T* p, const char* what) {
  require(p != nullptr, ErrorCode::InvalidArgument, std::string(what) + " is NULL");
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

json parse(const char* text, const char* what) {
  need(text, what);
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorCode::InvalidArgument, std::string(what) + ": " + e.what());
  }
}

std::string metadata_or_empty(const char* metadata) {
  if (!metadata) return "{}";
  return metadata;
}

}  // namespace

extern "C" {

const char* gk_version(void) { return "1.0.0"; }

const char* gk_last_error(void) { return last_error.c_str(); }

const char* gk_status_name(gk_status status) {
  switch (status) {
    case GK_OK: return "ok";
    case GK_ERR_INVALID_ARGUMENT: return "invalid argument";
    case GK_ERR_SHAPE: return "shape mismatch";
    case GK_ERR_NUMERIC: return "numeric failure";
    case GK_ERR_IO: return "i/o error";
    case GK_ERR_BUDGET: return "resource budget exceeded";
    case GK_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

void gk_string_free(char* s) { std::free(s); }

gk_status gk_image_create(size_t height, size_t width, const double* pixels, gk_image** out) {
  return guarded([&] {
    need(out, "out");
    require(height > 0 && width > 0, ErrorCode::InvalidArgument, "image dimensions must be positive");
    auto img = std::make_unique<gk_image>();
    img->image = Image(height, width);
    if (pixels) std::copy(pixels, pixels + height * width, img->image.pixels.begin());
    *out = img.release();
  });
}

void gk_image_free(gk_image* image) { delete image; }

gk_status gk_image_shape(const gk_image* image, size_t* height, size_t* width) {
  return guarded([&] {
    need(image, "image");
    if (height) *height = image->image.height;
    if (width) *width = image->image.width;
  });
}

const double* gk_image_data(const gk_image* image) {
  return image ? image->image.pixels.data() : nullptr;
}

gk_status gk_phantom_generate(const char* kind, size_t height, size_t width, uint64_t seed,
                              gk_image** out) {
  return guarded([&] {
    need(kind, "kind");
    need(out, "out");
    auto img = std::make_unique<gk_image>();
    img->image = acquisition::generate_phantom(kind, height, width, seed);
    *out = img.release();
  });
}

gk_status gk_masks_generate(size_t count, size_t height, size_t width, uint64_t seed, gk_masks** out) {
  return guarded([&] {
    need(out, "out");
    auto m = std::make_unique<gk_masks>();
    m->masks = acquisition::generate_masks(count, height, width, seed);
    *out = m.release();
  });
}

gk_status gk_masks_create(size_t count, size_t height, size_t width, const double* values,
                          gk_masks** out) {
  return guarded([&] {
    need(values, "values");
    need(out, "out");
    auto m = std::make_unique<gk_masks>();
    m->masks.count = count;
    m->masks.height = height;
    m->masks.width = width;
    m->masks.values.assign(values, values + count * height * width);
    acquisition::validate_masks(m->masks);
    *out = m.release();
  });
}

void gk_masks_free(gk_masks* masks) { delete masks; }

gk_status gk_masks_shape(const gk_masks* masks, size_t* count, size_t* height, size_t* width) {
  return guarded([&] {
    need(masks, "masks");
    if (count) *count = masks->masks.count;
    if (height) *height = masks->masks.height;
    if (width) *width = masks->masks.width;
  });
}

const double* gk_masks_data(const gk_masks* masks) {
  return masks ? masks->masks.values.data() : nullptr;
}

gk_status gk_buckets_create(size_t count, const double* values, const double* clean, gk_buckets** out) {
  return guarded([&] {
    need(values, "values");
    need(out, "out");
    auto b = std::make_unique<gk_buckets>();
    b->buckets.values.assign(values, values + count);
    if (clean) b->buckets.clean = std::vector<double>(clean, clean + count);
    *out = b.release();
  });
}

void gk_buckets_free(gk_buckets* buckets) { delete buckets; }

size_t gk_buckets_size(const gk_buckets* buckets) { return buckets ? buckets->buckets.size() : 0; }

const double* gk_buckets_data(const gk_buckets* buckets) {
  return buckets ? buckets->buckets.values.data() : nullptr;
}

const double* gk_buckets_clean(const gk_buckets* buckets) {
  return buckets && buckets->buckets.clean ? buckets->buckets.clean->data() : nullptr;
}

gk_status gk_forward_project(const gk_masks* masks, const gk_image* image, gk_buckets** out) {
  return guarded([&] {
    need(masks, "masks");
    need(image, "image");
    need(out, "out");
    auto b = std::make_unique<gk_buckets>();
    b->buckets = acquisition::forward_project(masks->masks, image->image);
    *out = b.release();
  });
}

gk_status gk_apply_poisson(const gk_buckets* clean, double photons, uint64_t seed, gk_buckets** out) {
  return guarded([&] {
    need(clean, "clean");
    need(out, "out");
    auto b = std::make_unique<gk_buckets>();
    b->buckets = acquisition::apply_poisson(clean->buckets, {photons, seed});
    *out = b.release();
  });
}

gk_status gk_noise_fluctuation_ratio(const gk_buckets* noisy, double* out) {
  return guarded([&] {
    need(noisy, "buckets");
    need(out, "out");
    require(noisy->buckets.clean.has_value(), ErrorCode::InvalidArgument,
            "noise ratio needs buckets with known clean values");
    *out = acquisition::noise_fluctuation_ratio(*noisy->buckets.clean, noisy->buckets.values);
  });
}

gk_status gk_pencil_beam_scan(const gk_image* image, double photons_per_pixel, uint64_t seed,
                              gk_image** out) {
  return guarded([&] {
    need(image, "image");
    need(out, "out");
    auto img = std::make_unique<gk_image>();
    img->image = acquisition::pencil_beam_scan(image->image, photons_per_pixel, seed);
    *out = img.release();
  });
}

gk_status gk_reconstruct(const gk_masks* masks, const gk_buckets* buckets, const char* config_json,
                         gk_report** out) {
  return guarded([&] {
    need(masks, "masks");
    need(buckets, "buckets");
    need(out, "out");
    const auto config = serialize::method_config(parse(config_json, "config"));
    auto rep = std::make_unique<gk_report>();
    rep->report = engines::reconstruct(config, masks->masks, buckets->buckets.values);
    rep->image.image = rep->report.image;
    *out = rep.release();
  });
}

void gk_report_free(gk_report* report) { delete report; }

const gk_image* gk_report_image(const gk_report* report) { return report ? &report->image : nullptr; }

gk_status gk_report_json(const gk_report* report, char** out) {
  return guarded([&] {
    need(report, "report");
    need(out, "out");
    *out = dup_string(serialize::to_json(report->report).dump(2));
  });
}

gk_status gk_report_trace_csv(const gk_report* report, char** out) {
  return guarded([&] {
    need(report, "report");
    need(out, "out");
    *out = dup_string(report->report.trace ? serialize::trace_csv(*report->report.trace) : "");
  });
}

double gk_report_wall_seconds(const gk_report* report) {
  return report && report->report.trace ? report->report.trace->wall_seconds : 0.0;
}

gk_status gk_report_attach_metrics(gk_report* report, const gk_image* reference) {
  return guarded([&] {
    need(report, "report");
    need(reference, "reference");
    report->report.metrics = metrics::evaluate(report->report.image, reference->image);
  });
}

gk_status gk_report_save_checkpoint(const gk_report* report, const char* path) {
  return guarded([&] {
    need(report, "report");
    need(path, "path");
    const auto& r = report->report;
    require(!r.parameters.empty(), ErrorCode::InvalidArgument,
            "only learned reconstructions have a checkpoint");
    std::vector<float> flat;
    json tensors = json::array();
    for (std::size_t i = 0; i < r.parameters.size(); ++i) {
      const auto& p = r.parameters[i];
      tensors.push_back({{"name", r.parameter_names[i]}, {"shape", p.shape}, {"offset", flat.size()}});
      flat.insert(flat.end(), p.values.begin(), p.values.end());
    }
    json meta = {{"kind", "model_checkpoint"},
                 {"tensors", tensors},
                 {"config", serialize::to_json(r.config)},
                 {"best_epoch", r.trace ? r.trace->best_epoch : 0},
                 {"input_normalization", {{"mean", r.input_mean}, {"std", r.input_std}}}};
    gitk::write_file(path, gitk::from_f32({flat.size()}, flat, meta.dump()));
  });
}

gk_status gk_evaluate(const gk_image* test, const gk_image* reference, int hann, gk_metrics* out,
                      char** frc_csv) {
  return guarded([&] {
    need(test, "test");
    need(reference, "reference");
    need(out, "out");
    const auto m = metrics::evaluate(test->image, reference->image, hann != 0);
    *out = {m.mse, m.psnr, m.ssim, m.resolution};
    if (frc_csv) *frc_csv = dup_string(serialize::frc_csv(m.frc));
  });
}

gk_status gk_sweep(const char* config_json, char** result_json, char** result_csv) {
  return guarded([&] {
    need(result_json, "result_json");
    const auto rows = experiments::run_sweep(serialize::sweep_config(parse(config_json, "sweep")));
    *result_json = dup_string(serialize::to_json(rows).dump(2));
    if (result_csv) *result_csv = dup_string(serialize::sweep_csv(rows));
  });
}

gk_status gk_dose(const char* config_json, char** result_json) {
  return guarded([&] {
    need(result_json, "result_json");
    const auto r = experiments::run_dose(serialize::dose_config(parse(config_json, "dose")));
    *result_json = dup_string(serialize::to_json(r).dump(2));
  });
}

gk_status gk_gridsearch(const gk_masks* masks, const gk_buckets* buckets, const char* config_json,
                        char** result_json) {
  return guarded([&] {
    need(masks, "masks");
    need(buckets, "buckets");
    need(result_json, "result_json");
    const auto j = parse(config_json, "gridsearch");
    require(j.is_object() && j.contains("method") && j.contains("lambdas"), ErrorCode::InvalidArgument,
            "gridsearch config needs \"method\" and \"lambdas\"");
    const auto& mj = j.at("method");
    const auto config = serialize::method_config(mj.is_string() ? json{{"method", mj}} : mj);
    std::vector<double> lambdas;
    for (const auto& v : j.at("lambdas")) lambdas.push_back(serialize::read_number(v));
    experiments::Dataset data;
    data.masks = masks->masks;
    data.buckets = buckets->buckets;
    *result_json = dup_string(serialize::to_json(experiments::run_gridsearch(config, data, lambdas)).dump(2));
  });
}

gk_status gk_image_save(const gk_image* image, const char* path, const char* metadata_json) {
  return guarded([&] {
    need(image, "image");
    need(path, "path");
    gitk::write_file(path, gitk::from_f64({image->image.height, image->image.width},
                                          image->image.pixels, metadata_or_empty(metadata_json)));
  });
}

gk_status gk_image_load(const char* path, gk_image** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    const auto a = gitk::read_file(path);
    require(a.dims.size() == 2, ErrorCode::Shape, std::string("'") + path + "' is not a 2D image");
    auto img = std::make_unique<gk_image>();
    img->image = Image(a.dims[0], a.dims[1], gitk::to_f64(a));
    *out = img.release();
  });
}

gk_status gk_masks_save(const gk_masks* masks, const char* path, const char* metadata_json) {
  return guarded([&] {
    need(masks, "masks");
    need(path, "path");
    const auto& m = masks->masks;
    gitk::write_file(path, gitk::from_f64({m.count, m.height, m.width}, m.values,
                                          metadata_or_empty(metadata_json)));
  });
}

gk_status gk_masks_load(const char* path, gk_masks** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    const auto a = gitk::read_file(path);
    require(a.dims.size() == 3, ErrorCode::Shape, std::string("'") + path + "' is not a mask stack");
    auto m = std::make_unique<gk_masks>();
    m->masks.count = a.dims[0];
    m->masks.height = a.dims[1];
    m->masks.width = a.dims[2];
    m->masks.values = gitk::to_f64(a);
    acquisition::validate_masks(m->masks);
    *out = m.release();
  });
}

gk_status gk_buckets_save(const gk_buckets* buckets, const char* path, const char* metadata_json) {
  return guarded([&] {
    need(buckets, "buckets");
    need(path, "path");
    gitk::write_file(path, gitk::from_f64({buckets->buckets.size()}, buckets->buckets.values,
                                          metadata_or_empty(metadata_json)));
  });
}

gk_status gk_buckets_load(const char* path, gk_buckets** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    const auto a = gitk::read_file(path);
    require(a.dims.size() == 1, ErrorCode::Shape, std::string("'") + path + "' is not a bucket vector");
    auto b = std::make_unique<gk_buckets>();
    b->buckets.values = gitk::to_f64(a);
    *out = b.release();
  });
}

gk_status gk_image_write_pgm(const gk_image* image, const char* path, double* lo, double* hi) {
  return guarded([&] {
    need(image, "image");
    need(path, "path");
    const auto [l, h] = serialize::write_pgm16(image->image, path);
    if (lo) *lo = l;
    if (hi) *hi = h;
  });
}

}  // extern "C"
