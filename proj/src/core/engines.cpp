#include "core/engines.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <functional>
#include <limits>
#include <memory>
#include <numeric>
#include <thread>

#include "core/adam.hpp"
#include "core/ops.hpp"
#include "core/rng.hpp"

namespace ghostkit::engines {

namespace ops = ghostkit::tensor;
using tensor::Tape;
using tensor::Tensor;
using tensor::Var;

std::string to_string(Method method) {
  switch (method) {
    case Method::Ls: return "ls";
    case Method::Tv: return "tv";
    case Method::Gidc: return "gidc";
    case Method::N2i: return "n2i";
    case Method::N2g: return "n2g";
    case Method::Inr: return "inr";
  }
  return "unknown";
}

Method parse_method(const std::string& name) {
  for (auto m : {Method::Ls, Method::Tv, Method::Gidc, Method::N2i, Method::N2g, Method::Inr})
    if (to_string(m) == name) return m;
  fail(ErrorCode::InvalidArgument,
       "unknown method '" + name + "' (ls, tv, gidc, n2i, n2g, inr)");
}

bool is_learned(Method method) { return method != Method::Ls && method != Method::Tv; }

TrainConfig TrainConfig::defaults_for(Method method) {
  TrainConfig c;
  c.epochs = method == Method::Inr ? 7000 : 5000;
  return c;
}

MethodConfig default_config(Method method) {
  MethodConfig c;
  c.method = method;
  c.train = TrainConfig::defaults_for(method);
  if (method == Method::Inr) c.model.kind = models::ModelKind::Inr;
  return c;
}

void validate(const TrainConfig& c, Method method) {
  require(c.epochs >= 0, ErrorCode::InvalidArgument, "train: epochs must be >= 0");
  require(c.lr > 0 && std::isfinite(c.lr), ErrorCode::InvalidArgument, "train: lr must be > 0");
  require(c.weight_decay >= 0, ErrorCode::InvalidArgument, "train: weight decay must be >= 0");
  require(c.lambda >= 0 && std::isfinite(c.lambda), ErrorCode::InvalidArgument,
          "train: lambda must be >= 0");
  require(c.cv_fraction > 0 && c.cv_fraction < 0.5, ErrorCode::InvalidArgument,
          "train: cv fraction must lie in (0, 0.5)");
  require(c.cv_repeats >= 1 && c.cv_repeat >= 0, ErrorCode::InvalidArgument,
          "train: cv repeats must be >= 1");
  require(c.tv_eps > 0, ErrorCode::InvalidArgument, "train: tv eps must be > 0");
  require(c.permutations >= 1, ErrorCode::InvalidArgument, "train: permutations must be >= 1");
  if (method == Method::N2g || method == Method::N2i)
    require(c.splits >= 2, ErrorCode::InvalidArgument,
            to_string(method) + " needs at least 2 splits");
}

std::size_t resolve_threads(std::size_t requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("GHOSTKIT_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && v > 0) return static_cast<std::size_t>(v);
  }
  return 1;
}

std::vector<std::size_t> cv_split(std::size_t m, double fraction, std::uint64_t seed, int repeat) {
  const auto count = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(fraction * double(m))));
  require(count < m, ErrorCode::InvalidArgument,
          "cross-validation would hold out all " + std::to_string(m) + " realizations");
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed, streams::kCrossValidation + (static_cast<std::uint64_t>(repeat) << 8));
  rng.shuffle(std::span<std::size_t>(order));
  std::vector<std::size_t> held(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(count));
  std::sort(held.begin(), held.end());
  return held;
}

namespace {

std::vector<float> to_float(std::span<const double> v) { return {v.begin(), v.end()}; }

// (alpha, beta) of a constant offset c for 1/2 ||A (o + c) - t||^2 with
// g = A 1: alpha = <g, A o - t>, beta = ||g||^2.
std::pair<double, double> offset_stats(std::span<const float> a, std::size_t rows, std::size_t cols,
                                       std::span<const double> g, std::span<const float> t,
                                       std::span<const float> o) {
  double alpha = 0.0, beta = 0.0;
  for (std::size_t m = 0; m < rows; ++m) {
    const float* row = a.data() + m * cols;
    double p = 0.0;
    for (std::size_t n = 0; n < cols; ++n) p += double(row[n]) * double(o[n]);
    alpha += g[m] * (p - double(t[m]));
    beta += g[m] * g[m];
  }
  return {alpha, beta};
}

std::vector<double> row_sums(std::span<const float> a, std::size_t rows, std::size_t cols) {
  std::vector<double> g(rows, 0.0);
  for (std::size_t m = 0; m < rows; ++m)
    for (std::size_t n = 0; n < cols; ++n) g[m] += double(a[m * cols + n]);
  return g;
}

struct CvData {
  MaskSet masks;
  std::vector<double> buckets;

  double loss(std::span<const double> x) const {
    double acc = 0.0;
    for (std::size_t m = 0; m < masks.count; ++m) {
      const auto row = masks.mask(m);
      double p = 0.0;
      for (std::size_t n = 0; n < row.size(); ++n) p += row[n] * x[n];
      const double d = p - buckets[m];
      acc += d * d;
    }
    return acc;
  }
};

struct Split {
  MaskSet train_masks;
  std::vector<double> train_buckets;
  CvData cv;
  std::vector<std::size_t> cv_indices;
};

Split hold_out(const MaskSet& masks, std::span<const double> y, const TrainConfig& c) {
  Split s;
  s.cv_indices = cv_split(masks.count, c.cv_fraction, c.seed, c.cv_repeat);
  std::vector<std::size_t> train;
  std::size_t j = 0;
  for (std::size_t m = 0; m < masks.count; ++m) {
    if (j < s.cv_indices.size() && s.cv_indices[j] == m) {
      ++j;
      continue;
    }
    train.push_back(m);
  }
  auto t = linear::extract(masks, y, train);
  s.train_masks = std::move(t.masks);
  s.train_buckets = std::move(t.buckets);
  auto v = linear::extract(masks, y, s.cv_indices);
  s.cv.masks = std::move(v.masks);
  s.cv.buckets = std::move(v.buckets);
  return s;
}

// A learned reconstruction problem: per-sample network inputs and a loss
// built on each sample's denormalized output.
struct Problem {
  std::size_t height = 0, width = 0;
  bool coordinates = false;  // INR: inputs are Fourier features
  std::vector<Tensor<float>> inputs;
  double mean = 0.0, scale = 1.0;
  std::function<Var<float>(std::size_t, Tape<float>&, Var<float>)> loss;
  // For a constant c added to sample s's output the data loss grows by
  // c*alpha + c^2*beta/2; returns (alpha, beta). The TV term ignores c.
  std::function<std::pair<double, double>(std::size_t, std::span<const float>)> offset_stats;
  std::size_t data_bytes = 0;
};

struct SampleResult {
  double loss = 0.0;
  std::vector<float> output;
  std::vector<std::vector<float>> grads;
  std::size_t tape_bytes = 0;
};

// Forward pass of one sample, kept alive until its loss is recorded.
struct Pass {
  std::unique_ptr<Tape<float>> tape;
  std::vector<Var<float>> bound;
  Var<float> out;
};

Pass forward_sample(const models::Model<float>& model, const Problem& prob, std::size_t s) {
  Pass p;
  p.tape = std::make_unique<Tape<float>>();
  p.bound = model.bind(*p.tape);
  const auto in = p.tape->constant(prob.inputs[s]);
  p.out = prob.coordinates ? model.inr_forward(*p.tape, p.bound, in, prob.height, prob.width)
                           : model.forward(*p.tape, p.bound, in);
  p.out = ops::affine(p.out, prob.scale, prob.mean);
  return p;
}

SampleResult finish_sample(Pass& p, const Problem& prob, std::size_t s, double shift,
                           bool with_grad) {
  const Var<float> out = shift == 0.0 ? p.out : ops::affine(p.out, 1.0, shift);
  const auto loss = prob.loss(s, *p.tape, out);
  SampleResult r;
  r.loss = loss.item();
  r.output.assign(out.values().begin(), out.values().end());
  r.tape_bytes = p.tape->value_bytes();
  if (with_grad) {
    p.tape->backward(loss);
    r.grads.resize(p.bound.size());
    for (std::size_t j = 0; j < p.bound.size(); ++j) {
      const auto g = p.tape->grad(p.bound[j]);
      r.grads[j].assign(g.begin(), g.end());
    }
  }
  p = Pass{};
  return r;
}

// Runs fn(s) for every sample; sample s goes to worker s % threads.
template <typename Fn>
void for_samples(std::size_t n, std::size_t threads, Fn fn) {
  threads = std::min(threads, n);
  if (threads <= 1) {
    for (std::size_t s = 0; s < n; ++s) fn(s);
    return;
  }
  std::vector<std::exception_ptr> errors(threads);
  auto work = [&](std::size_t t) {
    try {
      for (std::size_t s = t; s < n; s += threads) fn(s);
    } catch (...) {
      errors[t] = std::current_exception();
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(work, t);
  work(0);
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

struct EpochPass {
  std::vector<SampleResult> results;
  // Constant added to every output before the loss (0 unless solved).
  double shift = 0.0;
};

EpochPass run_all(const models::Model<float>& model, const Problem& prob, bool with_grad,
                  std::size_t threads, bool solve_offset) {
  const std::size_t n = prob.inputs.size();
  std::vector<Pass> passes(n);
  for_samples(n, threads, [&](std::size_t s) { passes[s] = forward_sample(model, prob, s); });
  EpochPass ep;
  if (solve_offset && prob.offset_stats) {
    double a = 0.0, b = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
      const auto [da, db] = prob.offset_stats(s, passes[s].out.values());
      a += da;
      b += db;
    }
    if (b > 0.0 && std::isfinite(a)) ep.shift = -a / b;
  }
  ep.results.resize(n);
  for_samples(n, threads, [&](std::size_t s) {
    ep.results[s] = finish_sample(passes[s], prob, s, ep.shift, with_grad);
  });
  return ep;
}

std::vector<double> average_outputs(const std::vector<SampleResult>& results) {
  std::vector<double> avg(results.front().output.size(), 0.0);
  for (const auto& r : results)
    for (std::size_t i = 0; i < avg.size(); ++i) avg[i] += double(r.output[i]);
  for (auto& v : avg) v /= double(results.size());
  return avg;
}

void normalize_inputs(Problem& prob, const std::vector<Image>& images) {
  double sum = 0.0, sq = 0.0, count = 0.0;
  for (const auto& img : images)
    for (double v : img.pixels) {
      sum += v;
      count += 1.0;
    }
  prob.mean = sum / count;
  for (const auto& img : images)
    for (double v : img.pixels) sq += (v - prob.mean) * (v - prob.mean);
  const double sd = std::sqrt(sq / count);
  prob.scale = sd > 0.0 && std::isfinite(sd) ? sd : 1.0;
  if (prob.coordinates) return;
  for (const auto& img : images) {
    Tensor<float> t({1, img.height, img.width});
    for (std::size_t i = 0; i < img.size(); ++i)
      t.values[i] = static_cast<float>((img.pixels[i] - prob.mean) / prob.scale);
    prob.inputs.push_back(std::move(t));
  }
}

Var<float> with_tv(Var<float> data, Var<float> out, double lambda, double eps) {
  if (lambda == 0.0) return data;
  return ops::add(data, ops::scale(ops::smoothed_tv_loss(out, eps), lambda));
}

ReconReport train(const models::ModelConfig& model_config, const TrainConfig& c, Method method,
                  const Problem& prob, const CvData& cv) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t threads = resolve_threads(c.threads);
  auto model = models::build_model<float>(model_config);
  const std::size_t samples = prob.inputs.size();

  ReconReport rep;
  rep.method = method;
  rep.parameter_count = model.parameter_count();
  rep.parameter_names = model.names;
  rep.input_mean = prob.mean;
  rep.input_std = prob.scale;

  // Working set: tapes (every sample's forward values are held while the
  // offset is solved, gradients for the concurrent ones), per-sample gradient
  // copies, model + Adam moments + best snapshot, and the fixed problem data.
  const bool solve = c.solve_offset && static_cast<bool>(prob.offset_stats);
  {
    auto pass = forward_sample(model, prob, 0);
    const auto probe = finish_sample(pass, prob, 0, 0.0, false);
    const std::size_t param_bytes = rep.parameter_count * sizeof(float);
    const std::size_t live = std::min(threads, samples);
    rep.memory_estimate_bytes = probe.tape_bytes * ((solve ? samples : live) + live) +
                                samples * (param_bytes + probe.output.size() * sizeof(float)) +
                                4 * param_bytes + prob.data_bytes;
    require(rep.memory_estimate_bytes <= c.memory_budget_bytes, ErrorCode::Budget,
            "estimated memory " + std::to_string(rep.memory_estimate_bytes >> 20) +
                " MiB for " + std::to_string(samples) + " sub-reconstructions exceeds the budget of " +
                std::to_string(c.memory_budget_bytes >> 20) + " MiB");
  }

  tensor::AdamConfig ac;
  ac.lr = c.lr;
  ac.weight_decay = c.weight_decay;
  tensor::Adam<float> adam(ac, model.params);

  TrainTrace trace;
  trace.best_cv_loss = std::numeric_limits<double>::infinity();
  std::vector<double> best_image;

  auto consider = [&](int epoch, double cv_loss, const std::vector<SampleResult>& results,
                      const std::vector<double>& avg) {
    if (!(cv_loss < trace.best_cv_loss)) return;
    trace.best_cv_loss = cv_loss;
    trace.best_epoch = epoch;
    best_image = avg;
    rep.sub_predictions.clear();
    for (const auto& r : results)
      rep.sub_predictions.emplace_back(prob.height, prob.width,
                                       std::vector<double>(r.output.begin(), r.output.end()));
    rep.parameters = model.params;
  };
  auto total_loss = [&](const std::vector<SampleResult>& results, int epoch) {
    double total = 0.0;
    for (const auto& r : results) total += r.loss;
    if (!std::isfinite(total)) {
      std::string msg = "training loss is not finite at epoch " + std::to_string(epoch);
      if (!trace.train_loss.empty())
        msg += " (previous loss " + std::to_string(trace.train_loss.back()) + ")";
      fail(ErrorCode::Numeric, msg);
    }
    return total;
  };

  // The offset enters only through the output-layer bias.
  auto run = [&](bool with_grad) {
    auto ep = run_all(model, prob, with_grad, threads, solve);
    if (ep.shift != 0.0)
      model.params.back().values[0] += static_cast<float>(ep.shift / (prob.scale * model.output_bias_gain()));
    return std::move(ep.results);
  };

  std::vector<std::vector<float>> grad_sum(model.params.size());
  for (int e = 0; e < c.epochs; ++e) {
    auto results = run(true);
    const double loss = total_loss(results, e);
    const auto avg = average_outputs(results);
    const double cvl = cv.loss(avg);
    trace.train_loss.push_back(loss);
    trace.cv_loss.push_back(cvl);
    if (c.monitor) c.monitor(e, avg);
    consider(e, cvl, results, avg);
    // Fixed summation order over samples, independent of the thread count.
    for (std::size_t j = 0; j < grad_sum.size(); ++j) {
      grad_sum[j].assign(model.params[j].size(), 0.0f);
      for (const auto& r : results) {
        const auto& g = r.grads[j];
        if (g.empty()) continue;
        for (std::size_t i = 0; i < g.size(); ++i) grad_sum[j][i] += g[i];
      }
    }
    adam.step(model.params, grad_sum);
  }
  const auto results = run(false);
  trace.final_train_loss = total_loss(results, c.epochs);
  const auto avg = average_outputs(results);
  trace.final_cv_loss = cv.loss(avg);
  if (c.monitor) c.monitor(c.epochs, avg);
  if (!c.early_stopping) trace.best_cv_loss = std::numeric_limits<double>::infinity();
  consider(c.epochs, trace.final_cv_loss, results, avg);
  if (best_image.empty()) {
    // Every CV loss was NaN-free but infinite; keep the final state.
    trace.best_epoch = c.epochs;
    best_image = avg;
    rep.parameters = model.params;
  }

  rep.image = Image(prob.height, prob.width, std::move(best_image));
  trace.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  rep.trace = std::move(trace);
  rep.config.method = method;
  rep.config.model = model_config;
  rep.config.train = c;
  return rep;
}

void check_inputs(const MaskSet& masks, std::span<const double> y) {
  require(masks.count == y.size(), ErrorCode::Shape,
          std::to_string(masks.count) + " masks but " + std::to_string(y.size()) + " buckets");
  require(masks.values.size() == masks.count * masks.pixels(), ErrorCode::Shape,
          "mask set size does not match its dimensions");
  for (double v : y)
    require(std::isfinite(v), ErrorCode::InvalidArgument, "buckets must be finite");
}

// Single-input problems (GIDC, INR): fit W_train N(r) to y_train.
ReconReport fit_full(const MaskSet& masks, std::span<const double> y,
                     const models::ModelConfig& model, const TrainConfig& c, Method method,
                     const linear::CglsConfig& cgls) {
  check_inputs(masks, y);
  validate(c, method);
  auto split = hold_out(masks, y, c);
  const Image r = linear::cgls_reconstruct(split.train_masks, split.train_buckets, cgls);

  Problem prob;
  prob.height = masks.height;
  prob.width = masks.width;
  prob.coordinates = method == Method::Inr;
  normalize_inputs(prob, {r});
  if (prob.coordinates) prob.inputs.push_back(models::build_model<float>(model).inr_features(prob.height, prob.width));

  auto w = std::make_shared<std::vector<float>>(to_float(split.train_masks.values));
  auto target = std::make_shared<std::vector<float>>(to_float(split.train_buckets));
  const std::size_t rows = split.train_masks.count, cols = split.train_masks.pixels();
  prob.data_bytes = (w->size() + target->size()) * sizeof(float) + prob.inputs[0].size() * sizeof(float);
  const double lambda = c.lambda, eps = c.tv_eps;
  prob.loss = [w, target, rows, cols, lambda, eps](std::size_t, Tape<float>&, Var<float> out) {
    const auto data = ops::half_squared_error(ops::project<float>(*w, rows, cols, out),
                                              std::span<const float>(*target));
    return with_tv(data, out, lambda, eps);
  };
  auto g = std::make_shared<std::vector<double>>(row_sums(*w, rows, cols));
  prob.offset_stats = [w, target, g, rows, cols](std::size_t, std::span<const float> o) {
    return offset_stats(*w, rows, cols, *g, *target, o);
  };
  auto rep = train(model, c, method, prob, split.cv);
  rep.cv_indices = std::move(split.cv_indices);
  return rep;
}

// Split-based problems (N2G, N2I).
ReconReport fit_splits(const MaskSet& masks, std::span<const double> y,
                       const models::ModelConfig& model, const TrainConfig& c, Method method,
                       const linear::CglsConfig& cgls) {
  check_inputs(masks, y);
  validate(c, method);
  require(model.kind != models::ModelKind::Inr, ErrorCode::InvalidArgument,
          to_string(method) + " needs an image-to-image model");
  auto split = hold_out(masks, y, c);
  const std::size_t k_count = c.splits, p_count = c.permutations;
  require(split.train_masks.count >= k_count, ErrorCode::InvalidArgument,
          "not enough training realizations for " + std::to_string(k_count) + " splits");
  auto ps = linear::permuted_splits(split.train_masks, split.train_buckets, k_count, p_count, c.seed);
  const auto subrecs = linear::sub_reconstruct_all(ps.subsets, cgls);

  Problem prob;
  prob.height = masks.height;
  prob.width = masks.width;
  normalize_inputs(prob, subrecs);
  const std::size_t cols = masks.pixels();
  const double lambda = c.lambda, eps = c.tv_eps;

  std::vector<LossTerm> terms;
  if (method == Method::N2g) {
    auto mats = std::make_shared<std::vector<std::vector<float>>>();
    auto targets = std::make_shared<std::vector<std::vector<float>>>();
    auto rows = std::make_shared<std::vector<std::size_t>>();
    for (const auto& sub : ps.subsets) {
      mats->push_back(to_float(sub.masks.values));
      targets->push_back(to_float(sub.buckets));
      rows->push_back(sub.masks.count);
      prob.data_bytes += (mats->back().size() + targets->back().size()) * sizeof(float);
    }
    for (std::size_t p = 0; p < p_count; ++p)
      for (std::size_t k = 0; k < k_count; ++k)
        for (std::size_t i = 0; i < k_count; ++i)
          if (i != k) terms.push_back({p, k, i});
    auto shared_terms = std::make_shared<std::vector<LossTerm>>(terms);
    prob.loss = [=](std::size_t s, Tape<float>&, Var<float> out) {
      std::vector<Var<float>> parts;
      for (const auto& t : *shared_terms) {
        if (t.permutation * k_count + t.input_split != s) continue;
        const std::size_t target = t.permutation * k_count + t.target_split;
        parts.push_back(ops::half_squared_error(
            ops::project<float>((*mats)[target], (*rows)[target], cols, out),
            std::span<const float>((*targets)[target])));
      }
      return with_tv(ops::add_scalars<float>(parts), out, lambda, eps);
    };
    auto sums = std::make_shared<std::vector<std::vector<double>>>();
    for (std::size_t j = 0; j < mats->size(); ++j) sums->push_back(row_sums((*mats)[j], (*rows)[j], cols));
    prob.offset_stats = [=](std::size_t s, std::span<const float> o) {
      std::pair<double, double> acc{0.0, 0.0};
      for (const auto& t : *shared_terms) {
        if (t.permutation * k_count + t.input_split != s) continue;
        const std::size_t j = t.permutation * k_count + t.target_split;
        const auto [a, b] = offset_stats((*mats)[j], (*rows)[j], cols, (*sums)[j], (*targets)[j], o);
        acc.first += a;
        acc.second += b;
      }
      return acc;
    };
  } else {
    // Target of x_{p,k}: mean of the other sub-reconstructions of permutation p.
    auto targets = std::make_shared<std::vector<std::vector<float>>>();
    for (std::size_t p = 0; p < p_count; ++p)
      for (std::size_t k = 0; k < k_count; ++k) {
        std::vector<double> acc(cols, 0.0);
        for (std::size_t i = 0; i < k_count; ++i) {
          if (i == k) continue;
          terms.push_back({p, k, i});
          const auto& px = subrecs[p * k_count + i].pixels;
          for (std::size_t n = 0; n < cols; ++n) acc[n] += px[n];
        }
        for (auto& v : acc) v /= double(k_count - 1);
        targets->push_back(to_float(acc));
        prob.data_bytes += cols * sizeof(float);
      }
    prob.loss = [=](std::size_t s, Tape<float>&, Var<float> out) {
      const auto data = ops::half_squared_error(out, std::span<const float>((*targets)[s]));
      return with_tv(data, out, lambda, eps);
    };
    prob.offset_stats = [=](std::size_t s, std::span<const float> o) {
      double alpha = 0.0;
      for (std::size_t n = 0; n < cols; ++n) alpha += double(o[n]) - double((*targets)[s][n]);
      return std::pair<double, double>{alpha, double(cols)};
    };
  }
  prob.data_bytes += prob.inputs.size() * cols * sizeof(float);

  auto rep = train(model, c, method, prob, split.cv);
  rep.loss_terms = std::move(terms);
  rep.cv_indices = std::move(split.cv_indices);
  return rep;
}

double tv_cv_loss(const MethodConfig& config, const MaskSet& masks, std::span<const double> y,
                  int repeat) {
  TrainConfig c = config.train;
  c.cv_repeat = repeat;
  auto split = hold_out(masks, y, c);
  const auto x =
      variational::tv_min_reconstruct(split.train_masks, split.train_buckets, config.tv);
  return split.cv.loss(x.pixels);
}

}  // namespace

ReconReport gidc_reconstruct(const MaskSet& masks, std::span<const double> y,
                             const models::ModelConfig& model, const TrainConfig& train) {
  return fit_full(masks, y, model, train, Method::Gidc, {});
}

ReconReport inr_reconstruct(const MaskSet& masks, std::span<const double> y,
                            const models::ModelConfig& model, const TrainConfig& train) {
  return fit_full(masks, y, model, train, Method::Inr, {});
}

ReconReport n2g_reconstruct(const MaskSet& masks, std::span<const double> y,
                            const models::ModelConfig& model, const TrainConfig& train) {
  return fit_splits(masks, y, model, train, Method::N2g, {});
}

ReconReport n2i_reconstruct(const MaskSet& masks, std::span<const double> y,
                            const models::ModelConfig& model, const TrainConfig& train) {
  return fit_splits(masks, y, model, train, Method::N2i, {});
}

ReconReport reconstruct(const MethodConfig& config, const MaskSet& masks,
                        std::span<const double> y) {
  ReconReport rep;
  switch (config.method) {
    case Method::Ls:
      check_inputs(masks, y);
      rep.image = linear::cgls_reconstruct(masks, y, config.cgls);
      break;
    case Method::Tv:
      check_inputs(masks, y);
      rep.image = variational::tv_min_reconstruct(masks, y, config.tv);
      break;
    case Method::Gidc:
    case Method::Inr:
      rep = fit_full(masks, y, config.model, config.train, config.method, config.cgls);
      break;
    case Method::N2g:
    case Method::N2i:
      rep = fit_splits(masks, y, config.model, config.train, config.method, config.cgls);
      break;
  }
  rep.method = config.method;
  rep.config = config;
  return rep;
}

LambdaSearch cross_validate_lambda(const MethodConfig& config, const MaskSet& masks,
                                   std::span<const double> y, std::span<const double> lambdas) {
  require(!lambdas.empty(), ErrorCode::InvalidArgument, "lambda grid is empty");
  require(config.method != Method::Ls, ErrorCode::InvalidArgument,
          "ls has no regularization weight to select");
  for (double l : lambdas)
    require(l >= 0 && std::isfinite(l), ErrorCode::InvalidArgument, "lambda must be >= 0");
  LambdaSearch out;
  out.lambdas.assign(lambdas.begin(), lambdas.end());
  out.best_lambda = lambdas.front();
  double best = std::numeric_limits<double>::infinity();
  for (double l : lambdas) {
    std::vector<double> losses;
    for (int rep = 0; rep < config.train.cv_repeats; ++rep) {
      MethodConfig c = config;
      if (c.method == Method::Tv) {
        c.tv.lambda = l;
        losses.push_back(tv_cv_loss(c, masks, y, rep));
      } else {
        c.train.lambda = l;
        c.train.cv_repeat = rep;
        losses.push_back(reconstruct(c, masks, y).trace->best_cv_loss);
      }
    }
    const double mean = std::accumulate(losses.begin(), losses.end(), 0.0) / double(losses.size());
    out.cv_losses.push_back(losses);
    out.mean_cv_loss.push_back(mean);
    if (mean < best || (mean == best && l > out.best_lambda)) {
      best = mean;
      out.best_lambda = l;
    }
  }
  return out;
}

LossProbe loss_decomposition_probe(const Image& output, const MaskSet& masks,
                                   std::span<const double> clean, double photons, int repeats,
                                   std::uint64_t seed) {
  require(masks.count == clean.size(), ErrorCode::Shape, "loss probe: masks and buckets differ");
  require(masks.height == output.height && masks.width == output.width, ErrorCode::Shape,
          "loss probe: output shape differs from the masks");
  require(repeats >= 2, ErrorCode::InvalidArgument, "loss probe: need at least 2 repeats");
  require(photons > 0, ErrorCode::InvalidArgument, "loss probe: photons must be > 0");
  const auto proj = [&] {
    std::vector<double> p(masks.count, 0.0);
    for (std::size_t m = 0; m < masks.count; ++m) {
      const auto row = masks.mask(m);
      for (std::size_t n = 0; n < row.size(); ++n) p[m] += row[n] * output.pixels[n];
    }
    return p;
  }();

  LossProbe probe;
  probe.repeats = repeats;
  for (std::size_t m = 0; m < clean.size(); ++m) {
    require(clean[m] >= 0, ErrorCode::InvalidArgument, "loss probe: clean buckets must be >= 0");
    probe.supervised += (proj[m] - clean[m]) * (proj[m] - clean[m]);
    if (std::isfinite(photons)) probe.noise_variance += clean[m] / photons;
  }
  Rng rng(seed, streams::kLossProbe);
  double mean = 0.0, m2 = 0.0;
  for (int r = 0; r < repeats; ++r) {
    double loss = 0.0;
    for (std::size_t m = 0; m < clean.size(); ++m) {
      const double y = std::isfinite(photons)
                           ? double(rng.poisson(photons * clean[m])) / photons
                           : clean[m];
      loss += (proj[m] - y) * (proj[m] - y);
    }
    const double delta = loss - mean;
    mean += delta / double(r + 1);
    m2 += delta * (loss - mean);
  }
  probe.empirical = mean;
  probe.standard_error = std::sqrt(m2 / double(repeats - 1) / double(repeats));
  return probe;
}

}  // namespace ghostkit::engines
