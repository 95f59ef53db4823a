#include "table/encoders/transformer.hpp"

#include <cmath>

#include "table/numerics/ops.hpp"

namespace table::encoders {

namespace num = table::numerics;

template <typename T>
Tensor<T> normal_param(num::Rng& rng, num::Shape shape, double stddev) {
  std::vector<T> values(num::shape_numel(shape));
  for (auto& v : values) v = static_cast<T>(rng.normal() * stddev);
  return Tensor<T>::from(std::move(shape), std::move(values), true);
}

template <typename T>
Tensor<T> constant_param(num::Shape shape, T value) {
  return Tensor<T>::full(std::move(shape), value, true);
}

template <typename T>
BlockParams<T> BlockParams<T>::init(num::Rng& rng, std::size_t dim, std::size_t hidden,
                                    std::size_t depth) {
  const double in_std = 1.0 / std::sqrt(static_cast<double>(dim));
  const double out_scale = 1.0 / std::sqrt(2.0 * static_cast<double>(depth == 0 ? 1 : depth));
  BlockParams p;
  p.ln1_gain = constant_param<T>({dim}, T(1));
  p.ln1_bias = constant_param<T>({dim}, T(0));
  p.wq = normal_param<T>(rng, {dim, dim}, in_std);
  p.bq = constant_param<T>({dim}, T(0));
  p.wk = normal_param<T>(rng, {dim, dim}, in_std);
  p.bk = constant_param<T>({dim}, T(0));
  p.wv = normal_param<T>(rng, {dim, dim}, in_std);
  p.bv = constant_param<T>({dim}, T(0));
  p.wo = normal_param<T>(rng, {dim, dim}, in_std * out_scale);
  p.bo = constant_param<T>({dim}, T(0));
  p.ln2_gain = constant_param<T>({dim}, T(1));
  p.ln2_bias = constant_param<T>({dim}, T(0));
  p.w1 = normal_param<T>(rng, {dim, hidden}, in_std);
  p.b1 = constant_param<T>({hidden}, T(0));
  p.w2 = normal_param<T>(rng, {hidden, dim},
                         out_scale / std::sqrt(static_cast<double>(hidden)));
  p.b2 = constant_param<T>({dim}, T(0));
  return p;
}

template <typename T>
void BlockParams<T>::visit(const std::string& prefix, const ParamVisitor<T>& f) {
  f(prefix + ".ln1.gain", ln1_gain);
  f(prefix + ".ln1.bias", ln1_bias);
  f(prefix + ".attn.wq", wq);
  f(prefix + ".attn.bq", bq);
  f(prefix + ".attn.wk", wk);
  f(prefix + ".attn.bk", bk);
  f(prefix + ".attn.wv", wv);
  f(prefix + ".attn.bv", bv);
  f(prefix + ".attn.wo", wo);
  f(prefix + ".attn.bo", bo);
  f(prefix + ".ln2.gain", ln2_gain);
  f(prefix + ".ln2.bias", ln2_bias);
  f(prefix + ".mlp.w1", w1);
  f(prefix + ".mlp.b1", b1);
  f(prefix + ".mlp.w2", w2);
  f(prefix + ".mlp.b2", b2);
}

template <typename T>
Tensor<T> transformer_block(const Tensor<T>& x, const BlockParams<T>& p, std::size_t heads,
                            AttentionCapture* capture) {
  const std::size_t len = x.dim(0);
  const std::size_t dim = x.dim(1);
  if (heads == 0 || dim % heads != 0) {
    throw num::DimensionError("transformer_block: width not divisible by heads");
  }
  const std::size_t head_dim = dim / heads;
  const T inv_sqrt = T(1) / std::sqrt(static_cast<T>(head_dim));

  const auto h = num::layer_norm(x, p.ln1_gain, p.ln1_bias);
  const auto q = num::add_bias(num::matmul(h, p.wq), p.bq);
  const auto k = num::add_bias(num::matmul(h, p.wk), p.bk);
  const auto v = num::add_bias(num::matmul(h, p.wv), p.bv);

  std::vector<Tensor<T>> head_out;
  head_out.reserve(heads);
  std::vector<double> mean_attn;
  if (capture) mean_attn.assign(len * len, 0.0);
  for (std::size_t hd = 0; hd < heads; ++hd) {
    const std::size_t lo = hd * head_dim, hi = lo + head_dim;
    const auto qh = num::slice(q, 1, lo, hi);
    const auto kh = num::slice(k, 1, lo, hi);
    const auto vh = num::slice(v, 1, lo, hi);
    const auto scores = num::scale(num::matmul(qh, num::transpose(kh)), inv_sqrt);
    const auto attn = num::softmax(scores, 1);
    if (capture) {
      for (std::size_t i = 0; i < len * len; ++i) {
        mean_attn[i] += static_cast<double>(attn[i]) / static_cast<double>(heads);
      }
    }
    head_out.push_back(num::matmul(attn, vh));
  }
  if (capture) {
    capture->slots = len;
    capture->layers.push_back(std::move(mean_attn));
  }
  const auto attn_out = num::add_bias(num::matmul(num::concat(head_out, 1), p.wo), p.bo);
  const auto x1 = num::add(x, attn_out);

  const auto h2 = num::layer_norm(x1, p.ln2_gain, p.ln2_bias);
  const auto mid = num::gelu(num::add_bias(num::matmul(h2, p.w1), p.b1));
  const auto mlp_out = num::add_bias(num::matmul(mid, p.w2), p.b2);
  return num::add(x1, mlp_out);
}

template <typename T>
Tensor<T> transformer_stack(Tensor<T> x, const std::vector<BlockParams<T>>& blocks,
                            std::size_t heads, AttentionCapture* capture) {
  for (const auto& block : blocks) x = transformer_block(x, block, heads, capture);
  return x;
}

#define TABLE_INSTANTIATE(T)                                                                    \
  template Tensor<T> normal_param<T>(num::Rng&, num::Shape, double);                           \
  template Tensor<T> constant_param<T>(num::Shape, T);                                         \
  template struct BlockParams<T>;                                                              \
  template Tensor<T> transformer_block(const Tensor<T>&, const BlockParams<T>&, std::size_t,   \
                                       AttentionCapture*);                                     \
  template Tensor<T> transformer_stack(Tensor<T>, const std::vector<BlockParams<T>>&,          \
                                       std::size_t, AttentionCapture*);

TABLE_INSTANTIATE(float)
TABLE_INSTANTIATE(double)

#undef TABLE_INSTANTIATE

}  // namespace table::encoders
