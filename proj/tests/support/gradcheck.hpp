#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "core/rng.hpp"
#include "core/tensor.hpp"

namespace gktest {

using ghostkit::Rng;
using ghostkit::tensor::Shape;
using ghostkit::tensor::Tape;
using ghostkit::tensor::Tensor;
using ghostkit::tensor::Var;

using Builder = std::function<Var<double>(Tape<double>&, const std::vector<Var<double>>&)>;

Tensor<double> random_tensor(const Shape& shape, Rng& rng, double lo = -1.0, double hi = 1.0);

// Reverse-mode gradient of L = sum_i c_i f(inputs)_i (random fixed c) against
// central differences in every input element. Returns
// ||g_ad - g_fd||_2 / max(||g_ad||_2, ||g_fd||_2) over all inputs jointly.
double gradcheck(const std::vector<Tensor<double>>& inputs, const Builder& f, std::uint64_t seed,
                 double step = 1e-6);

struct OpCase {
  std::string name;
  // One random case (shapes and values drawn from the seed); returns the
  // relative error of gradcheck.
  std::function<double(std::uint64_t seed)> run;
};

// Every differentiable operation, with randomized shapes.
std::vector<OpCase> op_cases();

// End-to-end checks through whole networks: tiny U-Net on an 8x8 input and a
// tiny INR on a 4x4 grid, loss = data term through a random projection + TV.
double tiny_unet_check(std::uint64_t seed, std::size_t levels);
double tiny_inr_check(std::uint64_t seed);

}  // namespace gktest
