#include "core/serialize.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>

namespace ghostkit::serialize {
namespace {

using Setter = std::function<void(const json&)>;

// Applies known keys and rejects anything else, naming the context.
void apply(const json& j, const std::string& where, const std::map<std::string, Setter>& setters) {
  require(j.is_object(), ErrorCode::InvalidArgument, where + ": expected a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    const auto found = setters.find(it.key());
    require(found != setters.end(), ErrorCode::InvalidArgument,
            where + ": unknown key '" + it.key() + "'");
    try {
      found->second(it.value());
    } catch (const json::exception& e) {
      fail(ErrorCode::InvalidArgument, where + "." + it.key() + ": " + e.what());
    }
  }
}

template <typename T>
Setter set(T& field) {
  return [&field](const json& v) {
    if constexpr (std::is_same_v<T, double>)
      field = read_number(v);
    else if constexpr (std::is_same_v<T, bool>)
      field = v.get<bool>();
    else if constexpr (std::is_integral_v<T>) {
      require(v.is_number_integer(), ErrorCode::InvalidArgument, "expected an integer");
      if constexpr (std::is_unsigned_v<T>)
        require(v.get<long long>() >= 0, ErrorCode::InvalidArgument, "expected a nonnegative integer");
      field = v.get<T>();
    } else
      field = v.get<T>();
  };
}

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream s;
  s.precision(17);
  s << v;
  return s.str();
}

json model_json(const models::ModelConfig& m) {
  return {{"kind", models::to_string(m.kind)},
          {"in_channels", m.in_channels},
          {"out_channels", m.out_channels},
          {"base_features", m.base_features},
          {"levels", m.levels},
          {"dncnn_depth", m.dncnn_depth},
          {"dncnn_features", m.dncnn_features},
          {"inr_hidden_layers", m.inr_hidden_layers},
          {"inr_width", m.inr_width},
          {"inr_embeddings", m.inr_embeddings},
          {"inr_sigma", m.inr_sigma},
          {"leaky_slope", m.leaky_slope},
          {"seed", m.seed}};
}

std::vector<engines::MethodConfig> method_list(const json& j) {
  require(j.is_array() && !j.empty(), ErrorCode::InvalidArgument, "methods: expected a non-empty array");
  std::vector<engines::MethodConfig> out;
  for (const auto& m : j) out.push_back(m.is_string() ? method_config(json{{"method", m}}) : method_config(m));
  return out;
}

}  // namespace

json number(double v) {
  if (std::isfinite(v)) return v;
  return fmt(v);
}

double read_number(const json& v) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  }
  fail(ErrorCode::InvalidArgument, "expected a number, got " + v.dump());
}

engines::MethodConfig method_config(const json& j) {
  require(j.is_object() && j.contains("method"), ErrorCode::InvalidArgument,
          "method config needs a \"method\" key");
  auto c = engines::default_config(engines::parse_method(j.at("method").get<std::string>()));
  bool model_seed_given = false;
  double budget_mb = -1.0;
  apply(j, "config",
        {{"method", [](const json&) {}},
         {"epochs", set(c.train.epochs)},
         {"lr", set(c.train.lr)},
         {"weight_decay", set(c.train.weight_decay)},
         {"lambda", set(c.train.lambda)},
         {"splits", set(c.train.splits)},
         {"permutations", set(c.train.permutations)},
         {"cv_fraction", set(c.train.cv_fraction)},
         {"cv_repeats", set(c.train.cv_repeats)},
         {"cv_repeat", set(c.train.cv_repeat)},
         {"seed", set(c.train.seed)},
         {"tv_eps", set(c.train.tv_eps)},
         {"memory_budget_mb", set(budget_mb)},
         {"threads", set(c.train.threads)},
         {"early_stopping", set(c.train.early_stopping)},
         {"solve_offset", set(c.train.solve_offset)},
         {"model",
          [&](const json& m) {
            apply(m, "model",
                  {{"kind", [&](const json& v) { c.model.kind = models::parse_model_kind(v.get<std::string>()); }},
                   {"in_channels", set(c.model.in_channels)},
                   {"out_channels", set(c.model.out_channels)},
                   {"base_features", set(c.model.base_features)},
                   {"levels", set(c.model.levels)},
                   {"dncnn_depth", set(c.model.dncnn_depth)},
                   {"dncnn_features", set(c.model.dncnn_features)},
                   {"inr_hidden_layers", set(c.model.inr_hidden_layers)},
                   {"inr_width", set(c.model.inr_width)},
                   {"inr_embeddings", set(c.model.inr_embeddings)},
                   {"inr_sigma", set(c.model.inr_sigma)},
                   {"leaky_slope", set(c.model.leaky_slope)},
                   {"seed", [&](const json& v) {
                      set(c.model.seed)(v);
                      model_seed_given = true;
                    }}});
          }},
         {"cgls",
          [&](const json& m) {
            apply(m, "cgls", {{"max_iters", set(c.cgls.max_iters)}, {"tol", set(c.cgls.tol)}});
          }},
         {"tv", [&](const json& m) {
            apply(m, "tv",
                  {{"lambda", set(c.tv.lambda)},
                   {"iterations", set(c.tv.iterations)},
                   {"nonnegative", set(c.tv.nonnegative)},
                   {"power_iterations", set(c.tv.power_iterations)},
                   {"seed", set(c.tv.seed)}});
          }}});
  if (budget_mb >= 0) c.train.memory_budget_bytes = static_cast<std::size_t>(budget_mb * 1048576.0);
  if (!model_seed_given) c.model.seed = c.train.seed;
  require(c.cgls.max_iters >= 0 && c.tv.iterations >= 1, ErrorCode::InvalidArgument,
          "config: iteration counts out of range");
  if (c.method == engines::Method::Inr)
    require(c.model.kind == models::ModelKind::Inr, ErrorCode::InvalidArgument,
            "method inr needs model kind inr");
  if (engines::is_learned(c.method)) {
    models::validate(c.model);
    engines::validate(c.train, c.method);
  }
  return c;
}

json to_json(const engines::MethodConfig& c) {
  const auto& t = c.train;
  return {{"method", engines::to_string(c.method)},
          {"epochs", t.epochs},
          {"lr", t.lr},
          {"weight_decay", t.weight_decay},
          {"lambda", t.lambda},
          {"splits", t.splits},
          {"permutations", t.permutations},
          {"cv_fraction", t.cv_fraction},
          {"cv_repeats", t.cv_repeats},
          {"cv_repeat", t.cv_repeat},
          {"seed", t.seed},
          {"tv_eps", t.tv_eps},
          {"memory_budget_mb", double(t.memory_budget_bytes) / 1048576.0},
          {"threads", t.threads},
          {"early_stopping", t.early_stopping},
          {"solve_offset", t.solve_offset},
          {"model", model_json(c.model)},
          {"cgls", {{"max_iters", c.cgls.max_iters}, {"tol", c.cgls.tol}}},
          {"tv",
           {{"lambda", c.tv.lambda},
            {"iterations", c.tv.iterations},
            {"nonnegative", c.tv.nonnegative},
            {"power_iterations", c.tv.power_iterations},
            {"seed", c.tv.seed}}}};
}

json to_json(const metrics::MetricBundle& m) {
  return {{"mse", number(m.mse)},
          {"psnr", number(m.psnr)},
          {"ssim", number(m.ssim)},
          {"resolution", number(m.resolution)},
          {"resolution_unit", "pixels (1 / half-bit crossing frequency)"}};
}

json to_json(const engines::ReconReport& r) {
  json j;
  j["method"] = engines::to_string(r.method);
  j["config"] = to_json(r.config);
  j["height"] = r.image.height;
  j["width"] = r.image.width;
  const bool learned = engines::is_learned(r.method);
  j["seeds"] = learned ? json{{"train", r.config.train.seed},
                              {"model", r.config.model.seed},
                              {"cv_repeat", r.config.train.cv_repeat}}
                       : json{{"tv_power_iteration", r.config.tv.seed}};
  if (learned) {
    j["parameter_count"] = r.parameter_count;
    j["memory_estimate_bytes"] = r.memory_estimate_bytes;
    j["input_normalization"] = {{"mean", r.input_mean}, {"std", r.input_std}};
    j["cv_realizations"] = r.cv_indices.size();
    j["sub_reconstructions"] = r.sub_predictions.size();
    if (r.config.method == engines::Method::N2g || r.config.method == engines::Method::N2i) {
      j["splits"] = r.config.train.splits;
      j["permutations"] = r.config.train.permutations;
    }
    json terms = json::array();
    for (const auto& t : r.loss_terms) terms.push_back({t.permutation, t.input_split, t.target_split});
    j["loss_terms"] = terms;
  }
  if (r.trace) {
    const auto& t = *r.trace;
    j["trace"] = {{"epochs", t.train_loss.size()},
                  {"best_epoch", t.best_epoch},
                  {"best_cv_loss", number(t.best_cv_loss)},
                  {"final_train_loss", number(t.final_train_loss)},
                  {"final_cv_loss", number(t.final_cv_loss)}};
  }
  if (r.metrics) j["metrics"] = to_json(*r.metrics);
  return j;
}

std::string trace_csv(const engines::TrainTrace& t) {
  std::string out = "epoch,train_loss,cv_loss\n";
  for (std::size_t e = 0; e < t.train_loss.size(); ++e)
    out += std::to_string(e) + "," + fmt(t.train_loss[e]) + "," + fmt(t.cv_loss[e]) + "\n";
  out += std::to_string(t.train_loss.size()) + "," + fmt(t.final_train_loss) + "," +
         fmt(t.final_cv_loss) + "\n";
  return out;
}

std::string frc_csv(const metrics::FrcCurve& c) {
  std::string out = "ring,frequency,correlation,samples,half_bit_threshold\n";
  for (std::size_t r = 0; r < c.frequency.size(); ++r)
    out += std::to_string(r) + "," + fmt(c.frequency[r]) + "," + fmt(c.correlation[r]) + "," +
           std::to_string(c.samples[r]) + "," + fmt(c.threshold[r]) + "\n";
  return out;
}

experiments::DatasetSpec dataset_spec(const json& j) {
  experiments::DatasetSpec s;
  apply(j, "data",
        {{"phantom", set(s.phantom)},
         {"size", [&](const json& v) { s.height = s.width = v.get<std::size_t>(); }},
         {"height", set(s.height)},
         {"width", set(s.width)},
         {"masks", set(s.masks)},
         {"photons", set(s.photons)},
         {"phantom_seed", set(s.phantom_seed)},
         {"seed", set(s.seed)}});
  return s;
}

json to_json(const experiments::DatasetSpec& s) {
  return {{"phantom", s.phantom},     {"height", s.height},
          {"width", s.width},         {"masks", s.masks},
          {"photons", number(s.photons)}, {"phantom_seed", s.phantom_seed},
          {"seed", s.seed}};
}

experiments::SweepConfig sweep_config(const json& j) {
  experiments::SweepConfig c;
  apply(j, "sweep",
        {{"data", [&](const json& v) { c.data = dataset_spec(v); }},
         {"photon_levels",
          [&](const json& v) {
            for (const auto& x : v) c.photon_levels.push_back(read_number(x));
          }},
         {"repeats", set(c.repeats)},
         {"methods", [&](const json& v) { c.methods = method_list(v); }},
         {"threads", set(c.threads)}});
  return c;
}

json to_json(const std::vector<experiments::SweepRow>& rows) {
  json out = json::array();
  for (const auto& r : rows) {
    json psnr = json::array();
    for (double v : r.psnr) psnr.push_back(number(v));
    out.push_back({{"method", engines::to_string(r.method)},
                   {"photons", number(r.photons)},
                   {"psnr_mean", number(r.psnr_mean)},
                   {"psnr_std", number(r.psnr_std)},
                   {"ssim_mean", r.ssim_mean},
                   {"ssim_std", r.ssim_std},
                   {"resolution_mean", r.resolution_mean},
                   {"resolution_std", r.resolution_std},
                   {"psnr", psnr},
                   {"ssim", r.ssim},
                   {"resolution", r.resolution}});
  }
  return out;
}

std::string sweep_csv(const std::vector<experiments::SweepRow>& rows) {
  std::string out =
      "method,photons,repeats,psnr_mean,psnr_std,ssim_mean,ssim_std,resolution_mean,resolution_std\n";
  for (const auto& r : rows)
    out += engines::to_string(r.method) + "," + fmt(r.photons) + "," + std::to_string(r.psnr.size()) +
           "," + fmt(r.psnr_mean) + "," + fmt(r.psnr_std) + "," + fmt(r.ssim_mean) + "," +
           fmt(r.ssim_std) + "," + fmt(r.resolution_mean) + "," + fmt(r.resolution_std) + "\n";
  return out;
}

experiments::DoseConfig dose_config(const json& j) {
  experiments::DoseConfig c;
  apply(j, "dose",
        {{"data", [&](const json& v) { c.data = dataset_spec(v); }},
         {"methods", [&](const json& v) { c.methods = method_list(v); }},
         {"pb_photons_per_pixel", set(c.pb_photons_per_pixel)},
         {"metric", set(c.metric)},
         {"photons_lo", set(c.photons_lo)},
         {"photons_hi", set(c.photons_hi)},
         {"repeats", set(c.repeats)},
         {"max_steps", set(c.max_steps)},
         {"tolerance", set(c.tolerance)},
         {"threads", set(c.threads)}});
  return c;
}

json to_json(const experiments::DoseResult& r) {
  json rows = json::array();
  for (const auto& row : r.rows) {
    json x = {{"method", engines::to_string(row.method)},
              {"photons", number(row.photons)},
              {"quality", number(row.quality)},
              {"steps", row.steps},
              {"bracket_edge", row.bracket_edge.empty() ? json(nullptr) : json(row.bracket_edge)},
              {"total_dose", number(row.total_dose)},
              {"max_pixel_dose", number(row.max_pixel_dose)},
              {"total_ratio_vs_pb", number(row.total_ratio_vs_pb)},
              {"max_pixel_ratio_vs_pb", number(row.max_pixel_ratio_vs_pb)}};
    x["total_ratio_vs_n2g"] = row.total_ratio_vs_n2g ? number(*row.total_ratio_vs_n2g) : json(nullptr);
    rows.push_back(x);
  }
  return {{"target_quality", number(r.target)},
          {"tolerance", r.tolerance},
          {"pb_total_dose", number(r.pb_total_dose)},
          {"pb_max_pixel_dose", number(r.pb_max_pixel_dose)},
          {"dose_model",
           "pencil beam: total = q*N, max pixel = q; ghost imaging: total = C*N*sum_m mean(w_m), "
           "max pixel per exposure = C*max(w)"},
          {"rows", rows}};
}

json to_json(const experiments::GridResult& r) {
  json rows = json::array();
  for (const auto& row : r.rows) {
    json losses = json::array();
    for (double v : row.cv_losses) losses.push_back(number(v));
    rows.push_back({{"lambda", row.lambda}, {"mean_cv_loss", number(row.mean_cv_loss)}, {"cv_losses", losses}});
  }
  return {{"method", engines::to_string(r.method)}, {"best_lambda", r.best_lambda}, {"rows", rows}};
}

std::pair<double, double> write_pgm16(const Image& image, const std::string& path) {
  require(image.size() > 0, ErrorCode::InvalidArgument, "pgm: empty image");
  const auto [lo_it, hi_it] = std::minmax_element(image.pixels.begin(), image.pixels.end());
  const double lo = *lo_it, hi = *hi_it;
  require(std::isfinite(lo) && std::isfinite(hi), ErrorCode::Numeric, "pgm: image is not finite");
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  require(bool(f), ErrorCode::Io, "cannot open '" + path + "' for writing");
  f << "P5\n" << image.width << " " << image.height << "\n65535\n";
  const double span = hi - lo;
  for (double v : image.pixels) {
    const auto q = span > 0 ? static_cast<unsigned>(std::lround((v - lo) / span * 65535.0)) : 0u;
    const char bytes[2] = {char(q >> 8), char(q & 0xff)};
    f.write(bytes, 2);
  }
  require(bool(f), ErrorCode::Io, "failed writing '" + path + "'");
  return {lo, hi};
}

}  // namespace ghostkit::serialize
