#include "table/encoders/encoders.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "table/datagen/vocabulary.hpp"
#include "table/numerics/ops.hpp"

namespace table::encoders {

namespace num = table::numerics;
using datagen::SpecialTokens;

namespace {

template <typename T>
std::vector<BlockParams<T>> init_blocks(num::Rng& rng, const EncoderConfig& c, std::size_t n) {
  std::vector<BlockParams<T>> blocks;
  for (std::size_t i = 0; i < n; ++i) {
    blocks.push_back(BlockParams<T>::init(rng, c.dim, c.dim * c.mlp_ratio, n));
  }
  return blocks;
}

template <typename T>
void visit_blocks(std::vector<BlockParams<T>>& blocks, const std::string& prefix,
                  const ParamVisitor<T>& f) {
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    blocks[i].visit(prefix + ".blocks." + std::to_string(i), f);
  }
}

}  // namespace

template <typename T>
TextEncoderParams<T> TextEncoderParams<T>::init(num::Rng& rng, const EncoderConfig& c) {
  const double proj_std = 1.0 / std::sqrt(static_cast<double>(c.dim));
  TextEncoderParams p;
  p.token_embedding = normal_param<T>(rng, {c.vocab_size, c.dim}, 1.0);
  p.position = normal_param<T>(rng, {c.max_text_len(), c.dim}, 0.1);
  p.blocks = init_blocks<T>(rng, c, c.text_layers);
  p.final_gain = constant_param<T>({c.dim}, T(1));
  p.final_bias = constant_param<T>({c.dim}, T(0));
  p.tag_projection = normal_param<T>(rng, {c.dim, c.dim}, proj_std);
  p.caption_projection = normal_param<T>(rng, {c.dim, c.dim}, proj_std);
  return p;
}

template <typename T>
void TextEncoderParams<T>::visit(const std::string& prefix, const ParamVisitor<T>& f) {
  f(prefix + ".token_embedding", token_embedding);
  f(prefix + ".position", position);
  visit_blocks(blocks, prefix, f);
  f(prefix + ".final_ln.gain", final_gain);
  f(prefix + ".final_ln.bias", final_bias);
  f(prefix + ".tag_projection", tag_projection);
  f(prefix + ".caption_projection", caption_projection);
}

template <typename T>
VisualEncoderParams<T> VisualEncoderParams<T>::init(num::Rng& rng, const EncoderConfig& c) {
  VisualEncoderParams p;
  p.input_projection =
      normal_param<T>(rng, {c.raw_frame_dim, c.dim}, 1.0 / std::sqrt(double(c.raw_frame_dim)));
  p.input_bias = constant_param<T>({c.dim}, T(0));
  p.position = normal_param<T>(rng, {c.max_frames, c.dim}, 0.1);
  p.blocks = init_blocks<T>(rng, c, c.visual_layers);
  p.final_gain = constant_param<T>({c.dim}, T(1));
  p.final_bias = constant_param<T>({c.dim}, T(0));
  p.output_projection = normal_param<T>(rng, {c.dim, c.dim}, 1.0 / std::sqrt(double(c.dim)));
  return p;
}

template <typename T>
void VisualEncoderParams<T>::visit(const std::string& prefix, const ParamVisitor<T>& f) {
  f(prefix + ".input_projection", input_projection);
  f(prefix + ".input_bias", input_bias);
  f(prefix + ".position", position);
  visit_blocks(blocks, prefix, f);
  f(prefix + ".final_ln.gain", final_gain);
  f(prefix + ".final_ln.bias", final_bias);
  f(prefix + ".output_projection", output_projection);
}

template <typename T>
TextEncoding<T> encode_text(std::span<const int> tokens, const TextEncoderParams<T>& params,
                            const EncoderConfig& config, TextPath path) {
  const auto eos = std::find(tokens.begin(), tokens.end(), SpecialTokens::eos);
  if (eos == tokens.end()) throw num::ContractError("encode_text: token sequence has no [EOS]");
  const std::size_t length = static_cast<std::size_t>(eos - tokens.begin()) + 1;
  if (tokens.size() > params.position.dim(0)) {
    throw num::DimensionError("encode_text: sequence longer than the positional table");
  }

  std::vector<int> positions(length);
  std::iota(positions.begin(), positions.end(), 0);
  auto x = num::add(num::embedding(params.token_embedding, tokens.first(length)),
                    num::embedding(params.position, std::span<const int>(positions)));
  x = transformer_stack(x, params.blocks, config.heads);
  x = num::layer_norm(x, params.final_gain, params.final_bias);

  TextEncoding<T> out;
  out.length = length;
  out.eos_state = num::row(x, length - 1);
  const auto& projection =
      path == TextPath::tag ? params.tag_projection : params.caption_projection;
  out.overall = num::l2_normalize(num::reshape(
      num::matmul(num::reshape(out.eos_state, {1, config.dim}), projection), {config.dim}));
  if (tokens.size() > length) {
    const auto padding = Tensor<T>::zeros({tokens.size() - length, config.dim});
    out.sequence = num::concat(std::vector<Tensor<T>>{x, padding}, 0);
  } else {
    out.sequence = x;
  }
  return out;
}

template <typename T>
Tensor<T> encode_frames(const Tensor<T>& frames, const VisualEncoderParams<T>& params,
                        const EncoderConfig& config) {
  if (frames.rank() != 2 || frames.dim(0) != config.max_frames ||
      frames.dim(1) != config.raw_frame_dim) {
    throw num::DimensionError("encode_frames: expected [" + std::to_string(config.max_frames) +
                              "," + std::to_string(config.raw_frame_dim) + "] frames, got " +
                              num::shape_str(frames.shape()));
  }
  auto x = num::add_bias(num::matmul(frames, params.input_projection), params.input_bias);
  x = num::add(x, params.position);
  x = transformer_stack(x, params.blocks, config.heads);
  x = num::layer_norm(x, params.final_gain, params.final_bias);
  return num::l2_normalize(num::matmul(x, params.output_projection));
}

template <typename T>
Tensor<T> frames_tensor(const std::vector<std::vector<float>>& frames) {
  if (frames.empty()) throw num::DimensionError("frames_tensor: no frames");
  const std::size_t width = frames.front().size();
  std::vector<T> values;
  values.reserve(frames.size() * width);
  for (const auto& f : frames) {
    if (f.size() != width) throw num::DimensionError("frames_tensor: ragged frames");
    for (float v : f) values.push_back(static_cast<T>(v));
  }
  return Tensor<T>::from({frames.size(), width}, std::move(values));
}

#define TABLE_INSTANTIATE(T)                                                                   \
  template struct TextEncoderParams<T>;                                                       \
  template struct VisualEncoderParams<T>;                                                     \
  template TextEncoding<T> encode_text(std::span<const int>, const TextEncoderParams<T>&,     \
                                       const EncoderConfig&, TextPath);                       \
  template Tensor<T> encode_frames(const Tensor<T>&, const VisualEncoderParams<T>&,           \
                                   const EncoderConfig&);                                     \
  template Tensor<T> frames_tensor<T>(const std::vector<std::vector<float>>&);

TABLE_INSTANTIATE(float)
TABLE_INSTANTIATE(double)

#undef TABLE_INSTANTIATE

}  // namespace table::encoders
