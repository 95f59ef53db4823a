#include "table/fusion/fusion.hpp"

#include <cmath>

#include "table/numerics/ops.hpp"

namespace table::fusion {

namespace num = table::numerics;
using encoders::constant_param;
using encoders::normal_param;

template <typename T>
CrossEncoderParams<T> CrossEncoderParams<T>::init(num::Rng& rng, const EncoderConfig& c) {
  const double head_std = 1.0 / std::sqrt(static_cast<double>(c.dim));
  CrossEncoderParams p;
  for (std::size_t i = 0; i < c.cross_layers; ++i) {
    p.blocks.push_back(BlockParams<T>::init(rng, c.dim, c.dim * c.mlp_ratio, c.cross_layers));
  }
  p.position = normal_param<T>(rng, {c.max_frames + 1 + c.max_caption_len, c.dim}, 0.1);
  p.segment = normal_param<T>(rng, {3, c.dim}, 0.1);
  p.lambda = constant_param<T>({1}, T(0));
  p.vtm_weight = normal_param<T>(rng, {c.dim, 2}, head_std);
  p.vtm_bias = constant_param<T>({2}, T(0));
  p.mlm_weight = normal_param<T>(rng, {c.dim, c.vocab_size}, head_std);
  p.mlm_bias = constant_param<T>({c.vocab_size}, T(0));
  return p;
}

template <typename T>
void CrossEncoderParams<T>::visit(const std::string& prefix, const ParamVisitor<T>& f) {
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    blocks[i].visit(prefix + ".blocks." + std::to_string(i), f);
  }
  f(prefix + ".position", position);
  f(prefix + ".segment", segment);
  f(prefix + ".lambda", lambda);
  f(prefix + ".vtm_head.weight", vtm_weight);
  f(prefix + ".vtm_head.bias", vtm_bias);
  f(prefix + ".mlm_head.weight", mlm_weight);
  f(prefix + ".mlm_head.bias", mlm_bias);
}

template <typename T>
ProjectionParams<T> ProjectionParams<T>::init(num::Rng& rng, const EncoderConfig& c) {
  const double std = 1.0 / std::sqrt(static_cast<double>(c.dim));
  return ProjectionParams{normal_param<T>(rng, {c.dim, c.shared_dim}, std),
                          normal_param<T>(rng, {c.dim, c.shared_dim}, std)};
}

template <typename T>
void ProjectionParams<T>::visit(const std::string& prefix, const ParamVisitor<T>& f) {
  f(prefix + ".video", video);
  f(prefix + ".text", text);
}

namespace {

/// Positional + segment embeddings for `frames` frame slots, `tags` tag rows
/// (all at slot N) and `text` text slots.
template <typename T>
Tensor<T> slot_embeddings(const CrossEncoderParams<T>& params, const EncoderConfig& config,
                          std::size_t frames, std::size_t tags, std::size_t text) {
  std::vector<int> pos, seg;
  for (std::size_t i = 0; i < frames; ++i) {
    pos.push_back(static_cast<int>(i));
    seg.push_back(static_cast<int>(Segment::frame));
  }
  for (std::size_t i = 0; i < tags; ++i) {
    pos.push_back(static_cast<int>(config.max_frames));
    seg.push_back(static_cast<int>(Segment::tag));
  }
  for (std::size_t i = 0; i < text; ++i) {
    pos.push_back(static_cast<int>(config.max_frames + 1 + i));
    seg.push_back(static_cast<int>(Segment::text));
  }
  return num::add(num::embedding(params.position, std::span<const int>(pos)),
                  num::embedding(params.segment, std::span<const int>(seg)));
}

template <typename T>
Tensor<T> as_rows(const Tensor<T>& x) {
  return x.rank() == 1 ? num::reshape(x, {1, x.dim(0)}) : x;
}

}  // namespace

template <typename T>
Tensor<T> tg_encode(const Tensor<T>& frames, const Tensor<T>& tag_rows,
                    const CrossEncoderParams<T>& params, const EncoderConfig& config,
                    AttentionCapture* capture) {
  const auto tags = as_rows(tag_rows);
  const std::size_t n = frames.dim(0), k = tags.dim(0);
  auto x = num::concat(std::vector<Tensor<T>>{frames, tags}, 0);
  x = num::add(x, slot_embeddings(params, config, n, k, 0));
  return encoders::transformer_stack(x, params.blocks, config.heads, capture);
}

template <typename T>
PooledVideo<T> pool_and_residual(const Tensor<T>& fused, const Tensor<T>& frames,
                                 const Tensor<T>& lambda) {
  if (fused.rank() != 2 || frames.rank() != 2 || fused.dim(1) != frames.dim(1)) {
    throw num::DimensionError("pool_and_residual: fused " + num::shape_str(fused.shape()) +
                              " vs frames " + num::shape_str(frames.shape()));
  }
  PooledVideo<T> out;
  out.fused_mean = num::mean(fused, 0);
  out.combined = num::add(num::mul_scalar(out.fused_mean, lambda), num::mean(frames, 0));
  return out;
}

template <typename T>
Tensor<T> similarity_matrix(const Tensor<T>& video_reprs, const Tensor<T>& caption_reprs,
                            const ProjectionParams<T>& projection) {
  const auto video = num::l2_normalize(num::matmul(as_rows(video_reprs), projection.video));
  const auto text = num::l2_normalize(num::matmul(as_rows(caption_reprs), projection.text));
  return num::matmul(video, num::transpose(text));
}

template <typename T>
Tensor<T> similarity(const Tensor<T>& video_repr, const Tensor<T>& caption_repr,
                     const ProjectionParams<T>& projection) {
  const auto video = num::l2_normalize(num::matmul(as_rows(video_repr), projection.video));
  const auto text = num::l2_normalize(num::matmul(as_rows(caption_repr), projection.text));
  return num::sum(num::mul(video, text));
}

template <typename T>
JointOutput<T> joint_encode(const Tensor<T>& frames, const Tensor<T>& tag_rows,
                            const Tensor<T>& text, std::size_t text_length,
                            const CrossEncoderParams<T>& params, const EncoderConfig& config,
                            AttentionCapture* capture) {
  const auto tags = as_rows(tag_rows);
  const std::size_t n = frames.dim(0), k = tags.dim(0), m = text.dim(0);
  if (text_length == 0 || text_length > m || text_length > config.max_caption_len) {
    throw num::DimensionError("joint_encode: text length " + std::to_string(text_length) +
                              " invalid for " + num::shape_str(text.shape()));
  }
  const auto content = num::slice(text, 0, 0, text_length);
  auto x = num::concat(std::vector<Tensor<T>>{frames, tags, content}, 0);
  x = num::add(x, slot_embeddings(params, config, n, k, text_length));
  x = encoders::transformer_stack(x, params.blocks, config.heads, capture);

  JointOutput<T> out;
  out.joint = num::row(x, 0);
  auto text_out = num::slice(x, 0, n + k, n + k + text_length);
  if (m > text_length) {
    text_out = num::concat(
        std::vector<Tensor<T>>{text_out, Tensor<T>::zeros({m - text_length, text.dim(1)})}, 0);
  }
  out.text_positions = text_out;
  return out;
}

template <typename T>
Tensor<T> vtm_head(const Tensor<T>& joint, const CrossEncoderParams<T>& params) {
  return num::reshape(num::add_bias(num::matmul(as_rows(joint), params.vtm_weight),
                                    params.vtm_bias),
                      {2});
}

template <typename T>
Tensor<T> mlm_head(const Tensor<T>& text_rows, const CrossEncoderParams<T>& params) {
  return num::add_bias(num::matmul(as_rows(text_rows), params.mlm_weight), params.mlm_bias);
}

#define TABLE_INSTANTIATE(T)                                                                  \
  template struct CrossEncoderParams<T>;                                                     \
  template struct ProjectionParams<T>;                                                       \
  template Tensor<T> tg_encode(const Tensor<T>&, const Tensor<T>&,                           \
                               const CrossEncoderParams<T>&, const EncoderConfig&,           \
                               AttentionCapture*);                                           \
  template PooledVideo<T> pool_and_residual(const Tensor<T>&, const Tensor<T>&,              \
                                            const Tensor<T>&);                               \
  template Tensor<T> similarity(const Tensor<T>&, const Tensor<T>&,                          \
                                const ProjectionParams<T>&);                                 \
  template Tensor<T> similarity_matrix(const Tensor<T>&, const Tensor<T>&,                   \
                                       const ProjectionParams<T>&);                          \
  template JointOutput<T> joint_encode(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, \
                                       std::size_t, const CrossEncoderParams<T>&,            \
                                       const EncoderConfig&, AttentionCapture*);             \
  template Tensor<T> vtm_head(const Tensor<T>&, const CrossEncoderParams<T>&);               \
  template Tensor<T> mlm_head(const Tensor<T>&, const CrossEncoderParams<T>&);

TABLE_INSTANTIATE(float)
TABLE_INSTANTIATE(double)

#undef TABLE_INSTANTIATE

}  // namespace table::fusion
