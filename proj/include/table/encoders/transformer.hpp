#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "table/numerics/random.hpp"
#include "table/numerics/tensor.hpp"

namespace table::encoders {

using numerics::Tensor;

/// Visitor signature used by every parameter struct.
template <typename T>
using ParamVisitor = std::function<void(const std::string& name, Tensor<T>& tensor)>;

/// Normal(0, stddev) leaf of the given shape.
template <typename T>
Tensor<T> normal_param(numerics::Rng& rng, numerics::Shape shape, double stddev);
template <typename T>
Tensor<T> constant_param(numerics::Shape shape, T value);

/// Pre-LayerNorm transformer block:
///   x += Wo·MHA(LN1(x));  x += W2·gelu(W1·LN2(x))
template <typename T>
struct BlockParams {
  Tensor<T> ln1_gain, ln1_bias;
  Tensor<T> wq, bq, wk, bk, wv, bv, wo, bo;
  Tensor<T> ln2_gain, ln2_bias;
  Tensor<T> w1, b1, w2, b2;

  static BlockParams init(numerics::Rng& rng, std::size_t dim, std::size_t hidden,
                          std::size_t depth);
  void visit(const std::string& prefix, const ParamVisitor<T>& f);
};

/// Head-averaged attention probabilities of each block, in layer order.
struct AttentionCapture {
  std::size_t slots = 0;
  std::vector<std::vector<double>> layers;  // each slots x slots, row-major
};

template <typename T>
Tensor<T> transformer_block(const Tensor<T>& x, const BlockParams<T>& p, std::size_t heads,
                            AttentionCapture* capture = nullptr);

template <typename T>
Tensor<T> transformer_stack(Tensor<T> x, const std::vector<BlockParams<T>>& blocks,
                            std::size_t heads, AttentionCapture* capture = nullptr);

}  // namespace table::encoders
