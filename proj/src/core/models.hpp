#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "core/tensor.hpp"

namespace ghostkit::models {

using tensor::Tape;
using tensor::Tensor;
using tensor::Var;

enum class ModelKind { UNet, DnCNN, Inr };

std::string to_string(ModelKind kind);
ModelKind parse_model_kind(const std::string& name);

struct ModelConfig {
  ModelKind kind = ModelKind::UNet;
  std::size_t in_channels = 1;
  std::size_t out_channels = 1;
  // U-Net: 3x3 conv pairs per scale, features doubling per level,
  // levels - 1 max-pool steps.
  std::size_t base_features = 20;
  std::size_t levels = 3;
  // DnCNN: depth conv layers of `features` channels, residual output.
  std::size_t dncnn_depth = 8;
  std::size_t dncnn_features = 32;
  // INR: Fourier embeddings -> hidden sine layers -> scalar.
  std::size_t inr_hidden_layers = 3;
  std::size_t inr_width = 512;
  std::size_t inr_embeddings = 256;
  double inr_sigma = 10.0;
  double leaky_slope = 0.2;
  std::uint64_t seed = 0;
};

void validate(const ModelConfig& config);

template <typename T>
class Model {
 public:
  ModelConfig config;
  std::vector<std::string> names;
  std::vector<Tensor<T>> params;
  // Frozen Gaussian frequency matrix [embeddings,2] of the INR.
  Tensor<T> fourier;

  std::size_t parameter_count() const;

  // The last parameter is the bias of the single-channel output layer; this is
  // d(output pixel)/d(that bias), the same for every pixel.
  double output_bias_gain() const { return config.kind == ModelKind::DnCNN ? -1.0 : 1.0; }

  // Registers every parameter as a trainable leaf.
  std::vector<Var<T>> bind(Tape<T>& tape) const;

  // Image-to-image models (U-Net, DnCNN): [C_in,H,W] -> [C_out,H,W].
  Var<T> forward(Tape<T>& tape, std::span<const Var<T>> bound, Var<T> input) const;

  // INR: features [H*W, 2*embeddings] -> [1,H,W].
  Var<T> inr_forward(Tape<T>& tape, std::span<const Var<T>> bound, Var<T> features, std::size_t h,
                     std::size_t w) const;

  // Fourier feature map of the pixel-centre grid in [-1,1]^2.
  Tensor<T> inr_features(std::size_t h, std::size_t w) const;

  template <typename U>
  Model<U> cast() const {
    Model<U> out;
    out.config = config;
    out.names = names;
    for (const auto& p : params)
      out.params.emplace_back(p.shape, std::vector<U>(p.values.begin(), p.values.end()));
    out.fourier = Tensor<U>(fourier.shape, std::vector<U>(fourier.values.begin(), fourier.values.end()));
    return out;
  }

 private:
  Var<T> unet(Tape<T>& tape, std::span<const Var<T>> bound, Var<T> input) const;
  Var<T> dncnn(Tape<T>& tape, std::span<const Var<T>> bound, Var<T> input) const;
};

// He-uniform conv/dense weights, SIREN-style sine layers, zero biases.
template <typename T>
Model<T> build_model(const ModelConfig& config);

extern template class Model<float>;
extern template class Model<double>;

}  // namespace ghostkit::models
