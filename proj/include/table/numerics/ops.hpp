#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "table/numerics/tensor.hpp"

// Differentiable tensor ops. Every op validates shapes (DimensionError),
// rejects non-finite outputs (NumericError), and records itself on the
// active tape when an input requires gradients.
namespace table::numerics {

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
Tensor<T> transpose(const Tensor<T>& x);

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);
/// Elementwise (Hadamard) product.
template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);

/// x[m,n] + bias[n] broadcast over rows.
template <typename T>
Tensor<T> add_bias(const Tensor<T>& x, const Tensor<T>& bias);

/// x * c for a constant c (no gradient w.r.t. c).
template <typename T>
Tensor<T> scale(const Tensor<T>& x, T c);

/// x * s where s is a one-element tensor (gradient flows to both).
template <typename T>
Tensor<T> mul_scalar(const Tensor<T>& x, const Tensor<T>& s);

template <typename T>
Tensor<T> exp(const Tensor<T>& x);

/// Exact GELU, 0.5 x (1 + erf(x / sqrt 2)).
template <typename T>
Tensor<T> gelu(const Tensor<T>& x);

/// Max-subtracted softmax along `axis`.
template <typename T>
Tensor<T> softmax(const Tensor<T>& x, std::size_t axis);
template <typename T>
Tensor<T> log_softmax(const Tensor<T>& x, std::size_t axis);

/// Normalizes over the last axis, then applies gain and bias of shape [d].
template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gain, const Tensor<T>& bias,
                     T eps = T(1e-5));

/// Unit L2 norm along the last axis. Throws NumericError on a zero vector.
template <typename T>
Tensor<T> l2_normalize(const Tensor<T>& x);

/// Concatenates along `axis`; all other dims must agree.
template <typename T>
Tensor<T> concat(std::span<const Tensor<T>> parts, std::size_t axis);
template <typename T>
Tensor<T> concat(const std::vector<Tensor<T>>& parts, std::size_t axis) {
  return concat(std::span<const Tensor<T>>(parts), axis);
}

/// Stacks k vectors of shape [d] into [k, d].
template <typename T>
Tensor<T> stack(const std::vector<Tensor<T>>& rows);

/// Half-open range [begin, end) along `axis`.
template <typename T>
Tensor<T> slice(const Tensor<T>& x, std::size_t axis, std::size_t begin, std::size_t end);

/// Row i of a rank-2 tensor as a vector of shape [n].
template <typename T>
Tensor<T> row(const Tensor<T>& x, std::size_t i);

/// Mean over `axis`, which is removed from the shape.
template <typename T>
Tensor<T> mean(const Tensor<T>& x, std::size_t axis);

/// Sum of all elements, shape [1].
template <typename T>
Tensor<T> sum(const Tensor<T>& x);

/// Mean of all elements, shape [1].
template <typename T>
Tensor<T> mean_all(const Tensor<T>& x);

template <typename T>
Tensor<T> reshape(const Tensor<T>& x, Shape shape);

/// Rows of `table` [V, d] selected by `ids`, shape [len(ids), d].
template <typename T>
Tensor<T> embedding(const Tensor<T>& table, std::span<const int> ids);

/// Elements at the given flat indices, shape [k].
template <typename T>
Tensor<T> pick(const Tensor<T>& x, std::span<const std::size_t> flat_indices);

}  // namespace table::numerics
