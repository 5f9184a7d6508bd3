#ifndef GHOSTKIT_GHOSTKIT_H
#define GHOSTKIT_GHOSTKIT_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(GHOSTKIT_BUILDING_LIBRARY)
#define GK_API __attribute__((visibility("default")))
#else
#define GK_API
#endif

/* Every fallible call returns a status; on failure gk_last_error() describes
   the problem (thread-local, valid until the next call on that thread). */
typedef enum gk_status {
  GK_OK = 0,
  GK_ERR_INVALID_ARGUMENT = 1,
  GK_ERR_SHAPE = 2,
  GK_ERR_NUMERIC = 3,
  GK_ERR_IO = 4,
  GK_ERR_BUDGET = 5,
  GK_ERR_INTERNAL = 6
} gk_status;

typedef struct gk_image gk_image;
typedef struct gk_masks gk_masks;
typedef struct gk_buckets gk_buckets;
typedef struct gk_report gk_report;

typedef struct gk_metrics {
  double mse;
  double psnr; /* +inf for identical images */
  double ssim;
  double resolution; /* pixels */
} gk_metrics;

GK_API const char* gk_version(void);
GK_API const char* gk_last_error(void);
GK_API const char* gk_status_name(gk_status status);
/* Strings returned through char** out-parameters. */
GK_API void gk_string_free(char* s);

/* Images: row-major doubles. */
GK_API gk_status gk_image_create(size_t height, size_t width, const double* pixels, gk_image** out);
GK_API void gk_image_free(gk_image* image);
GK_API gk_status gk_image_shape(const gk_image* image, size_t* height, size_t* width);
GK_API const double* gk_image_data(const gk_image* image);
/* kind: "blobs", "disks" or "flat". */
GK_API gk_status gk_phantom_generate(const char* kind, size_t height, size_t width, uint64_t seed,
                                     gk_image** out);

/* Mask sets: count x height x width values in [0,1]. */
GK_API gk_status gk_masks_generate(size_t count, size_t height, size_t width, uint64_t seed,
                                   gk_masks** out);
GK_API gk_status gk_masks_create(size_t count, size_t height, size_t width, const double* values,
                                 gk_masks** out);
GK_API void gk_masks_free(gk_masks* masks);
GK_API gk_status gk_masks_shape(const gk_masks* masks, size_t* count, size_t* height, size_t* width);
GK_API const double* gk_masks_data(const gk_masks* masks);

/* Bucket vectors; clean may be NULL when the noise-free values are unknown. */
GK_API gk_status gk_buckets_create(size_t count, const double* values, const double* clean,
                                   gk_buckets** out);
GK_API void gk_buckets_free(gk_buckets* buckets);
GK_API size_t gk_buckets_size(const gk_buckets* buckets);
GK_API const double* gk_buckets_data(const gk_buckets* buckets);
GK_API const double* gk_buckets_clean(const gk_buckets* buckets);

GK_API gk_status gk_forward_project(const gk_masks* masks, const gk_image* image, gk_buckets** out);
/* photons = INFINITY leaves the buckets noise-free. */
GK_API gk_status gk_apply_poisson(const gk_buckets* clean, double photons, uint64_t seed,
                                  gk_buckets** out);
GK_API gk_status gk_noise_fluctuation_ratio(const gk_buckets* noisy, double* out);
GK_API gk_status gk_pencil_beam_scan(const gk_image* image, double photons_per_pixel, uint64_t seed,
                                     gk_image** out);

/* Reconstruction. config_json is an object with at least "method"
   (ls, tv, gidc, n2i, n2g, inr); see the README for the other keys. */
GK_API gk_status gk_reconstruct(const gk_masks* masks, const gk_buckets* buckets,
                                const char* config_json, gk_report** out);
GK_API void gk_report_free(gk_report* report);
/* Borrowed; lives as long as the report. */
GK_API const gk_image* gk_report_image(const gk_report* report);
GK_API gk_status gk_report_json(const gk_report* report, char** out);
/* Per-epoch losses; an empty string for non-learned methods. */
GK_API gk_status gk_report_trace_csv(const gk_report* report, char** out);
GK_API double gk_report_wall_seconds(const gk_report* report);
GK_API gk_status gk_report_attach_metrics(gk_report* report, const gk_image* reference);
/* Selected-epoch parameters as one f32 GITK container with a name/shape manifest. */
GK_API gk_status gk_report_save_checkpoint(const gk_report* report, const char* path);

/* frc_csv may be NULL. */
GK_API gk_status gk_evaluate(const gk_image* test, const gk_image* reference, int hann,
                             gk_metrics* out, char** frc_csv);

/* Experiments take and return JSON documents. */
GK_API gk_status gk_sweep(const char* config_json, char** result_json, char** result_csv);
GK_API gk_status gk_dose(const char* config_json, char** result_json);
/* config_json: {"method": {...method config...}, "lambdas": [...]} */
GK_API gk_status gk_gridsearch(const gk_masks* masks, const gk_buckets* buckets,
                               const char* config_json, char** result_json);

/* GITK containers. metadata_json may be NULL for "{}". */
GK_API gk_status gk_image_save(const gk_image* image, const char* path, const char* metadata_json);
GK_API gk_status gk_image_load(const char* path, gk_image** out);
GK_API gk_status gk_masks_save(const gk_masks* masks, const char* path, const char* metadata_json);
GK_API gk_status gk_masks_load(const char* path, gk_masks** out);
/* Stores the observed values only. */
GK_API gk_status gk_buckets_save(const gk_buckets* buckets, const char* path,
                                 const char* metadata_json);
GK_API gk_status gk_buckets_load(const char* path, gk_buckets** out);

/* 16-bit PGM, min-max scaled; lo/hi (nullable) receive the mapped range. */
GK_API gk_status gk_image_write_pgm(const gk_image* image, const char* path, double* lo, double* hi);

#ifdef __cplusplus
}
#endif

#endif
