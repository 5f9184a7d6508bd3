#pragma once

#include <string>

#include <json.hpp>

#include "core/engines.hpp"
#include "core/experiments.hpp"

namespace ghostkit::serialize {

using nlohmann::json;

// Non-finite numbers are written as the strings "inf", "-inf" and "nan".
json number(double v);
double read_number(const json& v);

// Method configuration from a flat object; unknown keys are rejected.
// Recognized: method, epochs, lr, weight_decay, lambda, splits, permutations,
// cv_fraction, cv_repeats, cv_repeat, seed, tv_eps, memory_budget_mb, threads,
// model {kind, base_features, levels, dncnn_depth, dncnn_features,
// inr_hidden_layers, inr_width, inr_embeddings, inr_sigma, leaky_slope, seed},
// cgls {max_iters, tol}, tv {lambda, iterations, nonnegative, power_iterations, seed}.
// The model seed follows the training seed unless given.
engines::MethodConfig method_config(const json& j);
json to_json(const engines::MethodConfig& c);

// Deterministic content only (no wall time).
json to_json(const engines::ReconReport& r);
std::string trace_csv(const engines::TrainTrace& t);
std::string frc_csv(const metrics::FrcCurve& c);
json to_json(const metrics::MetricBundle& m);

experiments::DatasetSpec dataset_spec(const json& j);
json to_json(const experiments::DatasetSpec& s);

experiments::SweepConfig sweep_config(const json& j);
json to_json(const std::vector<experiments::SweepRow>& rows);
std::string sweep_csv(const std::vector<experiments::SweepRow>& rows);

experiments::DoseConfig dose_config(const json& j);
json to_json(const experiments::DoseResult& r);

json to_json(const experiments::GridResult& r);

// 16-bit binary PGM, min-max scaled. Returns the [lo, hi] mapped to [0, 65535].
std::pair<double, double> write_pgm16(const Image& image, const std::string& path);

}  // namespace ghostkit::serialize
