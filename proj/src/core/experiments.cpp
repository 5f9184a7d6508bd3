#include "core/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>
#include <thread>

#include "core/acquisition.hpp"

namespace ghostkit::experiments {
namespace {

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / double(v.size());
}

double std_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double acc = 0.0;
  for (double x : v) acc += (x - m) * (x - m);
  return std::sqrt(acc / double(v.size() - 1));
}

// Inner training runs stay single-threaded when the outer pool is busy.
engines::MethodConfig for_job(engines::MethodConfig c, std::size_t outer_threads,
                              std::uint64_t seed_offset) {
  if (outer_threads > 1) c.train.threads = 1;
  c.train.seed += seed_offset;
  return c;
}

double quality(const std::string& metric, const Image& x, const Image& ref) {
  return metric == "ssim" ? metrics::ssim(x, ref) : metrics::psnr(x, ref);
}

}  // namespace

void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, n));
  std::vector<std::exception_ptr> errors(n);
  auto work = [&](std::size_t t) {
    for (std::size_t i = t; i < n; i += threads) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(work, t);
  work(0);
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

Dataset make_dataset(const DatasetSpec& spec) {
  require(spec.photons > 0, ErrorCode::InvalidArgument, "dataset: photons must be > 0");
  Dataset d;
  d.spec = spec;
  d.phantom = acquisition::generate_phantom(spec.phantom, spec.height, spec.width, spec.phantom_seed);
  d.masks = acquisition::generate_masks(spec.masks, spec.height, spec.width, spec.seed);
  const auto clean = acquisition::forward_project(d.masks, d.phantom);
  d.buckets = acquisition::apply_poisson(clean, {spec.photons, spec.seed});
  return d;
}

std::vector<SweepRow> run_sweep(const SweepConfig& config) {
  require(!config.photon_levels.empty(), ErrorCode::InvalidArgument, "sweep: no photon levels");
  require(!config.methods.empty(), ErrorCode::InvalidArgument, "sweep: no methods");
  require(config.repeats >= 1, ErrorCode::InvalidArgument, "sweep: repeats must be >= 1");
  const std::size_t levels = config.photon_levels.size(), methods = config.methods.size();
  const std::size_t reps = std::size_t(config.repeats);
  const std::size_t threads = engines::resolve_threads(config.threads);

  std::vector<metrics::MetricBundle> results(levels * reps * methods);
  parallel_for(results.size(), threads, [&](std::size_t job) {
    const std::size_t l = job / (reps * methods), r = (job / methods) % reps, m = job % methods;
    DatasetSpec spec = config.data;
    spec.photons = config.photon_levels[l];
    spec.seed = config.data.seed + r;
    const auto data = make_dataset(spec);
    const auto rep = engines::reconstruct(for_job(config.methods[m], threads, r), data.masks,
                                          data.buckets.values);
    results[job] = metrics::evaluate(rep.image, data.phantom);
  });

  std::vector<SweepRow> rows;
  for (std::size_t l = 0; l < levels; ++l)
    for (std::size_t m = 0; m < methods; ++m) {
      SweepRow row;
      row.method = config.methods[m].method;
      row.photons = config.photon_levels[l];
      for (std::size_t r = 0; r < reps; ++r) {
        const auto& b = results[(l * reps + r) * methods + m];
        row.psnr.push_back(b.psnr);
        row.ssim.push_back(b.ssim);
        row.resolution.push_back(b.resolution);
      }
      row.psnr_mean = mean_of(row.psnr);
      row.psnr_std = std_of(row.psnr);
      row.ssim_mean = mean_of(row.ssim);
      row.ssim_std = std_of(row.ssim);
      row.resolution_mean = mean_of(row.resolution);
      row.resolution_std = std_of(row.resolution);
      rows.push_back(std::move(row));
    }
  return rows;
}

double gi_total_dose(const MaskSet& masks, double photons) {
  double sum_of_means = 0.0;
  for (std::size_t m = 0; m < masks.count; ++m) {
    const auto row = masks.mask(m);
    sum_of_means += std::accumulate(row.begin(), row.end(), 0.0) / double(row.size());
  }
  return photons * sum_of_means * double(masks.pixels());
}

double gi_max_pixel_dose(const MaskSet& masks, double photons) {
  return photons * *std::max_element(masks.values.begin(), masks.values.end());
}

DoseResult run_dose(const DoseConfig& config) {
  require(config.metric == "psnr" || config.metric == "ssim", ErrorCode::InvalidArgument,
          "dose: metric must be psnr or ssim");
  require(config.photons_lo > 0 && config.photons_lo < config.photons_hi &&
              std::isfinite(config.photons_hi),
          ErrorCode::InvalidArgument, "dose: need 0 < photons_lo < photons_hi < inf");
  require(config.pb_photons_per_pixel > 0, ErrorCode::InvalidArgument,
          "dose: pencil-beam photons must be > 0");
  require(config.repeats >= 1 && config.max_steps >= 1, ErrorCode::InvalidArgument,
          "dose: repeats and steps must be >= 1");
  const std::size_t threads = engines::resolve_threads(config.threads);
  const std::size_t reps = std::size_t(config.repeats);

  DoseResult out;
  out.tolerance = config.tolerance > 0 ? config.tolerance : (config.metric == "ssim" ? 0.005 : 0.25);
  const Image phantom = acquisition::generate_phantom(config.data.phantom, config.data.height,
                                                      config.data.width, config.data.phantom_seed);
  {
    std::vector<double> q;
    for (std::size_t r = 0; r < reps; ++r)
      q.push_back(quality(config.metric,
                          acquisition::pencil_beam_scan(phantom, config.pb_photons_per_pixel,
                                                        config.data.seed + r),
                          phantom));
    out.target = mean_of(q);
  }
  const double n = double(phantom.size());
  out.pb_total_dose = config.pb_photons_per_pixel * n;
  out.pb_max_pixel_dose = config.pb_photons_per_pixel;

  // Same realization seeds at every C, so the search sees a smooth curve.
  auto evaluate_at = [&](const engines::MethodConfig& mc, double photons) {
    std::vector<double> q(reps);
    parallel_for(reps, threads, [&](std::size_t r) {
      DatasetSpec spec = config.data;
      spec.photons = photons;
      spec.seed = config.data.seed + r;
      const auto data = make_dataset(spec);
      const auto rep = engines::reconstruct(for_job(mc, threads, r), data.masks, data.buckets.values);
      q[r] = quality(config.metric, rep.image, data.phantom);
    });
    return mean_of(q);
  };

  const auto masks = acquisition::generate_masks(config.data.masks, config.data.height,
                                                 config.data.width, config.data.seed);
  for (const auto& mc : config.methods) {
    DoseRow row;
    row.method = mc.method;
    double lo = config.photons_lo, hi = config.photons_hi;
    const double q_hi = evaluate_at(mc, hi);
    const double q_lo = evaluate_at(mc, lo);
    row.steps = 2;
    if (q_hi < out.target - out.tolerance) {
      row.bracket_edge = "high";
      row.photons = hi;
      row.quality = q_hi;
    } else if (q_lo > out.target + out.tolerance) {
      row.bracket_edge = "low";
      row.photons = lo;
      row.quality = q_lo;
    } else {
      for (int s = 0; s < config.max_steps; ++s) {
        const double mid = std::sqrt(lo * hi);
        const double q = evaluate_at(mc, mid);
        ++row.steps;
        row.photons = mid;
        row.quality = q;
        if (std::fabs(q - out.target) <= out.tolerance) break;
        (q < out.target ? lo : hi) = mid;
      }
    }
    row.total_dose = gi_total_dose(masks, row.photons);
    row.max_pixel_dose = gi_max_pixel_dose(masks, row.photons);
    row.total_ratio_vs_pb = row.total_dose / out.pb_total_dose;
    row.max_pixel_ratio_vs_pb = row.max_pixel_dose / out.pb_max_pixel_dose;
    out.rows.push_back(std::move(row));
  }
  const auto n2g = std::find_if(out.rows.begin(), out.rows.end(),
                                [](const DoseRow& r) { return r.method == engines::Method::N2g; });
  if (n2g != out.rows.end()) {
    const double ref = n2g->total_dose;
    for (auto& r : out.rows) r.total_ratio_vs_n2g = r.total_dose / ref;
  }
  return out;
}

GridResult run_gridsearch(const engines::MethodConfig& config, const Dataset& data,
                          std::span<const double> lambdas) {
  const auto search = engines::cross_validate_lambda(config, data.masks, data.buckets.values, lambdas);
  GridResult out;
  out.method = config.method;
  out.best_lambda = search.best_lambda;
  for (std::size_t i = 0; i < search.lambdas.size(); ++i)
    out.rows.push_back({search.lambdas[i], search.mean_cv_loss[i], search.cv_losses[i]});
  std::stable_sort(out.rows.begin(), out.rows.end(), [](const GridRow& a, const GridRow& b) {
    return a.mean_cv_loss < b.mean_cv_loss;
  });
  return out;
}

}  // namespace ghostkit::experiments
