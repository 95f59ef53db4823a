#pragma once

#include <span>
#include <vector>

#include "table/encoders/config.hpp"
#include "table/encoders/transformer.hpp"

namespace table::encoders {

/// Shared text encoder used for both tags and captions. Only the final
/// projections differ between the two paths.
template <typename T>
struct TextEncoderParams {
  Tensor<T> token_embedding;  // [V, d]
  Tensor<T> position;         // [max(K, M), d]
  std::vector<BlockParams<T>> blocks;
  Tensor<T> final_gain, final_bias;
  Tensor<T> tag_projection;      // [d, d]
  Tensor<T> caption_projection;  // [d, d]

  static TextEncoderParams init(numerics::Rng& rng, const EncoderConfig& config);
  void visit(const std::string& prefix, const ParamVisitor<T>& f);
};

template <typename T>
struct VisualEncoderParams {
  Tensor<T> input_projection;  // [D_raw, d]
  Tensor<T> input_bias;        // [d]
  Tensor<T> position;          // [N, d]
  std::vector<BlockParams<T>> blocks;
  Tensor<T> final_gain, final_bias;
  Tensor<T> output_projection;  // [d, d]

  static VisualEncoderParams init(numerics::Rng& rng, const EncoderConfig& config);
  void visit(const std::string& prefix, const ParamVisitor<T>& f);
};

enum class TextPath { tag, caption };

template <typename T>
struct TextEncoding {
  /// Last-layer states [max_len, d]; rows at and after padding are zero.
  Tensor<T> sequence;
  /// Number of content positions, [BOS] through [EOS].
  std::size_t length = 0;
  /// Last-layer state at [EOS] before the path projection, [d].
  Tensor<T> eos_state;
  /// Projected, L2-normalized [EOS] state, [d].
  Tensor<T> overall;
};

/// Encodes a padded token sequence. Positions after [EOS] are padding and
/// take no part in attention. Throws numerics::ContractError when the
/// sequence has no [EOS].
template <typename T>
TextEncoding<T> encode_text(std::span<const int> tokens, const TextEncoderParams<T>& params,
                            const EncoderConfig& config, TextPath path);

/// Per-frame embeddings [N, d], each row L2-normalized. `frames` is [N, D_raw].
template <typename T>
Tensor<T> encode_frames(const Tensor<T>& frames, const VisualEncoderParams<T>& params,
                        const EncoderConfig& config);

/// Row-major [N, D_raw] tensor from nested frame vectors.
template <typename T>
Tensor<T> frames_tensor(const std::vector<std::vector<float>>& frames);

}  // namespace table::encoders
