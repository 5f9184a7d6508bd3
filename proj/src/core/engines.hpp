#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "core/image.hpp"
#include "core/linear.hpp"
#include "core/metrics.hpp"
#include "core/models.hpp"
#include "core/variational.hpp"

namespace ghostkit::engines {

enum class Method { Ls, Tv, Gidc, N2i, N2g, Inr };

std::string to_string(Method method);
Method parse_method(const std::string& name);
bool is_learned(Method method);

struct TrainConfig {
  int epochs = 5000;
  double lr = 3e-4;
  double weight_decay = 1e-2;
  double lambda = 0.0;
  std::size_t splits = 4;        // K
  std::size_t permutations = 1;  // P
  double cv_fraction = 0.1;
  int cv_repeats = 3;
  // Selects the held-out realizations; cross-validation runs vary it.
  int cv_repeat = 0;
  std::uint64_t seed = 0;
  // Smoothing of the TV regularizer inside the training loss.
  double tv_eps = 1e-4;
  // Cap on the estimated working set of one training run.
  std::size_t memory_budget_bytes = std::size_t(4) << 30;
  // Worker threads for the per-sample passes; 0 reads GHOSTKIT_THREADS (default 1).
  std::size_t threads = 0;
  // When false the final parameters are reported instead of the min-CV ones.
  bool early_stopping = true;
  // Solve the output-layer bias exactly at every step (the loss is quadratic
  // in a constant output offset); Adam updates the remaining parameters.
  bool solve_offset = true;
  // Optional observer of the averaged prediction, called once per evaluated
  // epoch (including the final parameters). Not serialized.
  std::function<void(int epoch, std::span<const double> prediction)> monitor;
  // Defaults: 5000 epochs for CNNs, 7000 for the INR.
  static TrainConfig defaults_for(Method method);
};

void validate(const TrainConfig& config, Method method);

struct MethodConfig {
  Method method = Method::Ls;
  TrainConfig train;
  models::ModelConfig model;
  linear::CglsConfig cgls;
  variational::VariationalConfig tv;
};

// MethodConfig with the per-method defaults (INR model and epochs for inr).
MethodConfig default_config(Method method);

struct TrainTrace {
  // Entry e is measured at the parameters before update e+1.
  std::vector<double> train_loss;
  std::vector<double> cv_loss;
  // Losses at the parameters after the last update.
  double final_train_loss = 0.0;
  double final_cv_loss = 0.0;
  // In [0, epochs]; epochs means the final parameters.
  int best_epoch = 0;
  double best_cv_loss = 0.0;
  double wall_seconds = 0.0;
};

// One cross-split data term: network applied to x_{p,k}, fitted to split i.
struct LossTerm {
  std::size_t permutation = 0;
  std::size_t input_split = 0;
  std::size_t target_split = 0;
};

struct ReconReport {
  Method method = Method::Ls;
  MethodConfig config;
  Image image;
  std::optional<TrainTrace> trace;
  std::vector<LossTerm> loss_terms;
  // Per-sample network outputs at the selected epoch (learned methods).
  std::vector<Image> sub_predictions;
  std::vector<std::size_t> cv_indices;
  std::size_t parameter_count = 0;
  std::size_t memory_estimate_bytes = 0;
  double input_mean = 0.0;
  double input_std = 1.0;
  // Parameters at the selected epoch.
  std::vector<std::string> parameter_names;
  std::vector<tensor::Tensor<float>> parameters;
  std::optional<metrics::MetricBundle> metrics;
};

ReconReport reconstruct(const MethodConfig& config, const MaskSet& masks,
                        std::span<const double> buckets);

ReconReport gidc_reconstruct(const MaskSet& masks, std::span<const double> buckets,
                             const models::ModelConfig& model, const TrainConfig& train);
ReconReport n2g_reconstruct(const MaskSet& masks, std::span<const double> buckets,
                            const models::ModelConfig& model, const TrainConfig& train);
ReconReport n2i_reconstruct(const MaskSet& masks, std::span<const double> buckets,
                            const models::ModelConfig& model, const TrainConfig& train);
ReconReport inr_reconstruct(const MaskSet& masks, std::span<const double> buckets,
                            const models::ModelConfig& model, const TrainConfig& train);

// Held-out realization indices for a given seed and repeat, sorted.
std::vector<std::size_t> cv_split(std::size_t realizations, double fraction, std::uint64_t seed,
                                  int repeat);

struct LambdaSearch {
  std::vector<double> lambdas;
  // [lambda][repeat] minimum CV loss of each run.
  std::vector<std::vector<double>> cv_losses;
  std::vector<double> mean_cv_loss;
  double best_lambda = 0.0;
};

// cv_repeats runs per lambda with different held-out sets; argmin of the mean
// minimum CV loss, ties going to the larger lambda. Works for tv and the
// learned methods.
LambdaSearch cross_validate_lambda(const MethodConfig& config, const MaskSet& masks,
                                   std::span<const double> buckets,
                                   std::span<const double> lambdas);

struct LossProbe {
  double empirical = 0.0;       // mean over draws of ||W_i o - y_i||^2
  double standard_error = 0.0;  // of that mean
  double supervised = 0.0;      // ||W_i o - b_i||^2
  double noise_variance = 0.0;  // E||eps_i||^2 = sum b / C
  int repeats = 0;
};

// Monte-Carlo check of E||W o - y||^2 = ||W o - b||^2 + E||eps||^2 for a fixed
// output o, clean buckets b = W x and y = Poisson(C b) / C.
LossProbe loss_decomposition_probe(const Image& output, const MaskSet& masks,
                                   std::span<const double> clean, double photons, int repeats,
                                   std::uint64_t seed);

// Number of worker threads implied by a config value of 0 or n.
std::size_t resolve_threads(std::size_t requested);

}  // namespace ghostkit::engines
