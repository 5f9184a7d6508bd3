#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "core/engines.hpp"

namespace ghostkit::experiments {

struct DatasetSpec {
  std::string phantom = "blobs";
  std::size_t height = 64;
  std::size_t width = 64;
  std::size_t masks = 800;
  double photons = 100.0;  // C; infinity for noiseless buckets
  std::uint64_t phantom_seed = 0;
  // Masks and noise.
  std::uint64_t seed = 0;
};

struct Dataset {
  DatasetSpec spec;
  Image phantom;
  MaskSet masks;
  BucketVector buckets;
};

Dataset make_dataset(const DatasetSpec& spec);

struct SweepConfig {
  DatasetSpec data;
  std::vector<double> photon_levels;
  int repeats = 5;
  std::vector<engines::MethodConfig> methods;
  std::size_t threads = 0;
};

struct SweepRow {
  engines::Method method = engines::Method::Ls;
  double photons = 0.0;
  std::vector<double> psnr, ssim, resolution;  // one per repeat
  double psnr_mean = 0, psnr_std = 0;
  double ssim_mean = 0, ssim_std = 0;
  double resolution_mean = 0, resolution_std = 0;
};

// Repeat r uses realization seed data.seed + r at every level, with the
// phantom held fixed. Rows are level-major, then in method order.
std::vector<SweepRow> run_sweep(const SweepConfig& config);

struct DoseConfig {
  DatasetSpec data;
  std::vector<engines::MethodConfig> methods;
  double pb_photons_per_pixel = 10.0;
  std::string metric = "psnr";  // or "ssim"
  double photons_lo = 0.1;
  double photons_hi = 1e4;
  int repeats = 1;
  int max_steps = 16;
  // Matching tolerance; 0 selects 0.25 dB for PSNR and 0.005 for SSIM.
  double tolerance = 0.0;
  std::size_t threads = 0;
};

struct DoseRow {
  engines::Method method = engines::Method::Ls;
  double photons = 0.0;  // matched C
  double quality = 0.0;  // metric at the matched C
  int steps = 0;
  // "low" or "high" when the target lies outside the bracket, else empty.
  std::string bracket_edge;
  double total_dose = 0.0;
  double max_pixel_dose = 0.0;
  double total_ratio_vs_pb = 0.0;
  double max_pixel_ratio_vs_pb = 0.0;
  std::optional<double> total_ratio_vs_n2g;
};

struct DoseResult {
  double target = 0.0;  // pencil-beam quality
  double tolerance = 0.0;
  double pb_total_dose = 0.0;
  double pb_max_pixel_dose = 0.0;
  std::vector<DoseRow> rows;
};

// Pencil beam: total = q N, per-pixel maximum = q.
// Ghost imaging: total = C N sum_m mean(w_m), per-pixel maximum per exposure = C max(w).
double gi_total_dose(const MaskSet& masks, double photons);
double gi_max_pixel_dose(const MaskSet& masks, double photons);

// Log-space bisection on C for each method until its mean quality over the
// repeats matches the pencil-beam target within the tolerance.
DoseResult run_dose(const DoseConfig& config);

struct GridRow {
  double lambda = 0.0;
  double mean_cv_loss = 0.0;
  std::vector<double> cv_losses;
};

struct GridResult {
  engines::Method method = engines::Method::Tv;
  std::vector<GridRow> rows;  // ascending mean CV loss
  double best_lambda = 0.0;
};

GridResult run_gridsearch(const engines::MethodConfig& config, const Dataset& data,
                          std::span<const double> lambdas);

// Runs fn(i) for i in [0, n) on up to `threads` workers; rethrows the first
// failure by index.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn);

}  // namespace ghostkit::experiments
