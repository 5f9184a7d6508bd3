#include "core/models.hpp"

#include <cmath>

#include "core/ops.hpp"
#include "core/rng.hpp"

namespace ghostkit::models {

namespace ops = ghostkit::tensor;

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::UNet: return "unet";
    case ModelKind::DnCNN: return "dncnn";
    case ModelKind::Inr: return "inr";
  }
  return "unknown";
}

ModelKind parse_model_kind(const std::string& name) {
  if (name == "unet") return ModelKind::UNet;
  if (name == "dncnn") return ModelKind::DnCNN;
  if (name == "inr") return ModelKind::Inr;
  fail(ErrorCode::InvalidArgument, "unknown model kind '" + name + "' (unet, dncnn, inr)");
}

void validate(const ModelConfig& c) {
  require(c.in_channels > 0 && c.out_channels > 0, ErrorCode::InvalidArgument,
          "model: channel counts must be positive");
  switch (c.kind) {
    case ModelKind::UNet:
      require(c.base_features > 0 && c.levels > 0, ErrorCode::InvalidArgument,
              "unet: base_features and levels must be positive");
      break;
    case ModelKind::DnCNN:
      require(c.dncnn_depth >= 2 && c.dncnn_features > 0, ErrorCode::InvalidArgument,
              "dncnn: depth must be >= 2 and features positive");
      require(c.in_channels == c.out_channels, ErrorCode::InvalidArgument,
              "dncnn: residual output needs in_channels == out_channels");
      break;
    case ModelKind::Inr:
      require(c.inr_hidden_layers > 0 && c.inr_width > 0 && c.inr_embeddings > 0 &&
                  c.inr_sigma > 0,
              ErrorCode::InvalidArgument, "inr: sizes and sigma must be positive");
      break;
  }
  require(c.leaky_slope >= 0 && c.leaky_slope < 1, ErrorCode::InvalidArgument,
          "model: leaky slope must lie in [0,1)");
}

namespace {

template <typename T>
struct Builder {
  Model<T>& model;
  Rng rng;

  void add(std::string name, tensor::Shape shape, double bound) {
    Tensor<T> t(std::move(shape));
    for (auto& v : t.values) v = static_cast<T>(rng.uniform(-bound, bound));
    model.names.push_back(std::move(name));
    model.params.push_back(std::move(t));
  }

  void conv(const std::string& name, std::size_t cin, std::size_t cout, std::size_t k) {
    add(name + ".weight", {cout, cin, k, k}, std::sqrt(6.0 / double(cin * k * k)));
    add(name + ".bias", {cout}, 0.0);
  }

  void dense(const std::string& name, std::size_t in, std::size_t out, double bound) {
    add(name + ".weight", {out, in}, bound);
    add(name + ".bias", {out}, 0.0);
  }
};

// Consumes bound parameters in build order.
template <typename T>
struct Cursor {
  std::span<const Var<T>> bound;
  std::size_t next = 0;

  Var<T> take() {
    require(next < bound.size(), ErrorCode::InvalidArgument, "model: too few bound parameters");
    return bound[next++];
  }
  Var<T> conv(Var<T> x) {
    auto w = take();
    auto b = take();
    return ops::conv2d(x, w, b);
  }
  Var<T> dense(Var<T> x) {
    auto w = take();
    auto b = take();
    return ops::dense(x, w, b);
  }
};

}  // namespace

template <typename T>
Model<T> build_model(const ModelConfig& config) {
  validate(config);
  Model<T> model;
  model.config = config;
  model.fourier = Tensor<T>({0});
  Builder<T> b{model, Rng(config.seed, streams::kModelInit)};
  switch (config.kind) {
    case ModelKind::UNet: {
      std::vector<std::size_t> feats;
      for (std::size_t l = 0; l < config.levels; ++l) feats.push_back(config.base_features << l);
      std::size_t cin = config.in_channels;
      for (std::size_t l = 0; l < config.levels; ++l) {
        const std::string tag = "enc" + std::to_string(l);
        b.conv(tag + ".conv1", cin, feats[l], 3);
        b.conv(tag + ".conv2", feats[l], feats[l], 3);
        cin = feats[l];
      }
      for (std::size_t l = config.levels - 1; l-- > 0;) {
        const std::string tag = "dec" + std::to_string(l);
        b.conv(tag + ".conv1", feats[l] + feats[l + 1], feats[l], 3);
        b.conv(tag + ".conv2", feats[l], feats[l], 3);
      }
      b.conv("head", feats[0], config.out_channels, 1);
      break;
    }
    case ModelKind::DnCNN: {
      const std::size_t f = config.dncnn_features;
      b.conv("layer0", config.in_channels, f, 3);
      for (std::size_t d = 1; d + 1 < config.dncnn_depth; ++d)
        b.conv("layer" + std::to_string(d), f, f, 3);
      b.conv("layer" + std::to_string(config.dncnn_depth - 1), f, config.out_channels, 3);
      break;
    }
    case ModelKind::Inr: {
      const std::size_t width = config.inr_width;
      std::size_t in = 2 * config.inr_embeddings;
      for (std::size_t l = 0; l < config.inr_hidden_layers; ++l) {
        b.dense("sine" + std::to_string(l), in, width, std::sqrt(6.0 / double(in)));
        in = width;
      }
      // SIREN output layer scaled by 1/omega_0 with omega_0 = 30.
      b.dense("out", in, 1, std::sqrt(6.0 / double(in)) / 30.0);
      Rng frng(config.seed, streams::kFourierFeatures);
      Tensor<T> f({config.inr_embeddings, 2});
      for (auto& v : f.values) v = static_cast<T>(config.inr_sigma * frng.normal());
      model.fourier = std::move(f);
      break;
    }
  }
  return model;
}

template <typename T>
std::size_t Model<T>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params) n += p.size();
  return n;
}

template <typename T>
std::vector<Var<T>> Model<T>::bind(Tape<T>& tape) const {
  std::vector<Var<T>> out;
  out.reserve(params.size());
  for (const auto& p : params) out.push_back(tape.leaf(p, true));
  return out;
}

template <typename T>
Var<T> Model<T>::forward(Tape<T>& tape, std::span<const Var<T>> bound, Var<T> input) const {
  require(bound.size() == params.size(), ErrorCode::InvalidArgument,
          "model: expected " + std::to_string(params.size()) + " bound parameters, got " +
              std::to_string(bound.size()));
  switch (config.kind) {
    case ModelKind::UNet: return unet(tape, bound, input);
    case ModelKind::DnCNN: return dncnn(tape, bound, input);
    case ModelKind::Inr: break;
  }
  fail(ErrorCode::InvalidArgument, "model: INR takes coordinates, use inr_forward");
}

template <typename T>
Var<T> Model<T>::unet(Tape<T>&, std::span<const Var<T>> bound, Var<T> input) const {
  require(input.shape().size() == 3 && input.shape()[0] == config.in_channels, ErrorCode::Shape,
          "unet: input must be [" + std::to_string(config.in_channels) + ",H,W], got " +
              tensor::to_string(input.shape()));
  const double slope = config.leaky_slope;
  Cursor<T> cur{bound};
  std::vector<Var<T>> skips;
  Var<T> x = input;
  for (std::size_t l = 0; l < config.levels; ++l) {
    if (l > 0) x = ops::maxpool2x2(x);
    x = ops::leaky_relu(cur.conv(x), slope);
    x = ops::leaky_relu(cur.conv(x), slope);
    skips.push_back(x);
  }
  for (std::size_t l = config.levels - 1; l-- > 0;) {
    const auto& skip = skips[l];
    auto up = ops::upsample_nearest2x(x, skip.shape()[1], skip.shape()[2]);
    x = ops::concat_channels(skip, up);
    x = ops::leaky_relu(cur.conv(x), slope);
    x = ops::leaky_relu(cur.conv(x), slope);
  }
  return cur.conv(x);
}

template <typename T>
Var<T> Model<T>::dncnn(Tape<T>&, std::span<const Var<T>> bound, Var<T> input) const {
  require(input.shape().size() == 3 && input.shape()[0] == config.in_channels, ErrorCode::Shape,
          "dncnn: input must be [" + std::to_string(config.in_channels) + ",H,W], got " +
              tensor::to_string(input.shape()));
  Cursor<T> cur{bound};
  Var<T> x = ops::relu(cur.conv(input));
  for (std::size_t d = 1; d + 1 < config.dncnn_depth; ++d) x = ops::relu(cur.conv(x));
  // Residual learning: the chain predicts the noise to subtract.
  return ops::sub(input, cur.conv(x));
}

template <typename T>
Var<T> Model<T>::inr_forward(Tape<T>&, std::span<const Var<T>> bound, Var<T> features,
                             std::size_t h, std::size_t w) const {
  require(config.kind == ModelKind::Inr, ErrorCode::InvalidArgument,
          "inr_forward on a " + to_string(config.kind) + " model");
  require(bound.size() == params.size(), ErrorCode::InvalidArgument,
          "inr: wrong number of bound parameters");
  require(features.shape() == tensor::Shape{h * w, 2 * config.inr_embeddings}, ErrorCode::Shape,
          "inr: features must be [" + std::to_string(h * w) + "," +
              std::to_string(2 * config.inr_embeddings) + "], got " +
              tensor::to_string(features.shape()));
  Cursor<T> cur{bound};
  Var<T> x = features;
  for (std::size_t l = 0; l < config.inr_hidden_layers; ++l) x = ops::sin(cur.dense(x));
  x = cur.dense(x);
  return ops::reshape(x, {1, h, w});
}

template <typename T>
Tensor<T> Model<T>::inr_features(std::size_t h, std::size_t w) const {
  require(config.kind == ModelKind::Inr, ErrorCode::InvalidArgument,
          "inr_features on a " + to_string(config.kind) + " model");
  const std::size_t e = config.inr_embeddings;
  Tensor<T> out({h * w, 2 * e});
  for (std::size_t y = 0; y < h; ++y) {
    const double vy = -1.0 + (2.0 * double(y) + 1.0) / double(h);
    for (std::size_t x = 0; x < w; ++x) {
      const double vx = -1.0 + (2.0 * double(x) + 1.0) / double(w);
      T* row = out.values.data() + (y * w + x) * 2 * e;
      for (std::size_t j = 0; j < e; ++j) {
        const double phase =
            2.0 * M_PI * (double(fourier.values[2 * j]) * vy + double(fourier.values[2 * j + 1]) * vx);
        row[j] = static_cast<T>(std::sin(phase));
        row[e + j] = static_cast<T>(std::cos(phase));
      }
    }
  }
  return out;
}

template class Model<float>;
template class Model<double>;
template Model<float> build_model<float>(const ModelConfig&);
template Model<double> build_model<double>(const ModelConfig&);

}  // namespace ghostkit::models
