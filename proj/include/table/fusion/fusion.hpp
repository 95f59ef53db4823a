#pragma once

#include <vector>

#include "table/encoders/config.hpp"
#include "table/encoders/transformer.hpp"

namespace table::fusion {

using encoders::AttentionCapture;
using encoders::BlockParams;
using encoders::EncoderConfig;
using encoders::ParamVisitor;
using numerics::Tensor;

/// Segment ids of the cross-modal sequence.
enum class Segment { frame = 0, tag = 1, text = 2 };

/// One block set shared by the tag-guiding encoder and the joint encoder.
template <typename T>
struct CrossEncoderParams {
  std::vector<BlockParams<T>> blocks;
  Tensor<T> position;  // [N + 1 + M, d]
  Tensor<T> segment;   // [3, d]
  Tensor<T> lambda;    // [1], residual weight of the fused pooled output
  Tensor<T> vtm_weight, vtm_bias;  // [d, 2], [2]
  Tensor<T> mlm_weight, mlm_bias;  // [d, V], [V]

  static CrossEncoderParams init(numerics::Rng& rng, const EncoderConfig& config);
  void visit(const std::string& prefix, const ParamVisitor<T>& f);
};

/// Linear maps into the shared similarity space.
template <typename T>
struct ProjectionParams {
  Tensor<T> video;  // phi, [d, d_s]
  Tensor<T> text;   // psi, [d, d_s]

  static ProjectionParams init(numerics::Rng& rng, const EncoderConfig& config);
  void visit(const std::string& prefix, const ParamVisitor<T>& f);
};

/// Fuses frame embeddings v [N, d] with the tag anchor [k, d] (k = 1 for the
/// overall tag embedding) by full self-attention over the concatenation.
/// Every tag row occupies position slot N. Returns [N + k, d].
template <typename T>
Tensor<T> tg_encode(const Tensor<T>& frames, const Tensor<T>& tag_rows,
                    const CrossEncoderParams<T>& params, const EncoderConfig& config,
                    AttentionCapture* capture = nullptr);

template <typename T>
struct PooledVideo {
  Tensor<T> fused_mean;  // mean over all fused rows, [d]
  Tensor<T> combined;    // lambda * fused_mean + mean(frames), [d]
};

template <typename T>
PooledVideo<T> pool_and_residual(const Tensor<T>& fused, const Tensor<T>& frames,
                                 const Tensor<T>& lambda);

/// normalize(video_repr · phi) · normalize(caption_repr · psi), shape [1].
template <typename T>
Tensor<T> similarity(const Tensor<T>& video_repr, const Tensor<T>& caption_repr,
                     const ProjectionParams<T>& projection);

/// Batched similarity, rows = videos [Bv, d], columns = captions [Bt, d].
template <typename T>
Tensor<T> similarity_matrix(const Tensor<T>& video_reprs, const Tensor<T>& caption_reprs,
                            const ProjectionParams<T>& projection);

template <typename T>
struct JointOutput {
  Tensor<T> joint;           // output at the first frame slot, [d]
  Tensor<T> text_positions;  // [M, d]; rows at padding positions are zero
};

/// Runs [frames; tag; text] through the shared cross-modal blocks. `text` holds
/// the text encoder's last-layer states; rows at index >= text_length are
/// padding and are excluded from attention.
template <typename T>
JointOutput<T> joint_encode(const Tensor<T>& frames, const Tensor<T>& tag_rows,
                            const Tensor<T>& text, std::size_t text_length,
                            const CrossEncoderParams<T>& params, const EncoderConfig& config,
                            AttentionCapture* capture = nullptr);

/// Match / no-match logits, [2] (index 1 = match).
template <typename T>
Tensor<T> vtm_head(const Tensor<T>& joint, const CrossEncoderParams<T>& params);

/// Vocabulary logits for each row of `text_rows` [k, d] -> [k, V].
template <typename T>
Tensor<T> mlm_head(const Tensor<T>& text_rows, const CrossEncoderParams<T>& params);

}  // namespace table::fusion
