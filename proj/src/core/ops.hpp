#pragma once

#include <span>

#include "core/tensor.hpp"

// Differentiable operations. Each records one node on the tape of its inputs.
// Reductions (loss sums, bias gradients) accumulate in double; matrix
// products run through BLAS in the tensor's own precision.
namespace ghostkit::tensor {

// input [C_in,H,W], kernel [C_out,C_in,k,k] with odd k, bias [C_out];
// zero padding of (k-1)/2 keeps the spatial size.
template <typename T>
Var<T> conv2d(Var<T> input, Var<T> kernel, Var<T> bias);

// input [n] or [batch,n], weight [m,n], bias [m].
template <typename T>
Var<T> dense(Var<T> input, Var<T> weight, Var<T> bias);

template <typename T>
Var<T> relu(Var<T> x);
template <typename T>
Var<T> leaky_relu(Var<T> x, double slope);
template <typename T>
Var<T> sin(Var<T> x);

// [C,H,W] -> [C,ceil(H/2),ceil(W/2)]. Odd edges are padded by replication.
// The gradient goes to the first maximal element in row-major window order.
template <typename T>
Var<T> maxpool2x2(Var<T> x);

// [C,H,W] -> [C,out_h,out_w] with out_h <= 2H, out_w <= 2W (0 means 2H / 2W).
template <typename T>
Var<T> upsample_nearest2x(Var<T> x, std::size_t out_h = 0, std::size_t out_w = 0);

// [Ca,H,W] ++ [Cb,H,W] -> [Ca+Cb,H,W]
template <typename T>
Var<T> concat_channels(Var<T> a, Var<T> b);

template <typename T>
Var<T> add(Var<T> a, Var<T> b);
template <typename T>
Var<T> sub(Var<T> a, Var<T> b);
template <typename T>
Var<T> scale(Var<T> x, double factor);
// x * factor + shift, elementwise with scalar constants.
template <typename T>
Var<T> affine(Var<T> x, double factor, double shift);
template <typename T>
Var<T> reshape(Var<T> x, Shape shape);
template <typename T>
Var<T> sum(Var<T> x);
// Sum of scalar nodes, in the order given.
template <typename T>
Var<T> add_scalars(std::span<const Var<T>> terms);

// mean((pred - target)^2); differentiable in both arguments.
template <typename T>
Var<T> mse_loss(Var<T> pred, Var<T> target);

// 0.5 * ||pred - target||^2 against constant data.
template <typename T>
Var<T> half_squared_error(Var<T> pred, std::span<const T> target);

// Isotropic TV of the last two axes: sum sqrt(dx^2 + dy^2 + eps^2), forward
// differences, zero difference across the far boundary.
template <typename T>
Var<T> smoothed_tv_loss(Var<T> image, double eps);

// Constant matrix [rows,cols] (row-major, caller keeps it alive until the
// backward pass) times a flattened x with cols elements -> [rows].
template <typename T>
Var<T> project(std::span<const T> matrix, std::size_t rows, std::size_t cols, Var<T> x);

}  // namespace ghostkit::tensor
