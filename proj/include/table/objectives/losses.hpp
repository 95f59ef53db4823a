#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "table/datagen/vocabulary.hpp"
#include "table/numerics/random.hpp"
#include "table/numerics/tensor.hpp"

namespace table::objectives {

using numerics::Tensor;

/// Learnable logit scale, stored as its log. The effective scale exp(w) is
/// kept inside [min_scale, max_scale] by clamp() after each optimizer step.
template <typename T>
struct Temperature {
  static constexpr double min_scale = 1.0;
  static constexpr double max_scale = 100.0;

  Tensor<T> log_scale;  // [1]

  static Temperature init(double initial_scale);
  /// exp(w) as a differentiable [1] tensor.
  Tensor<T> scale() const;
  double value() const;
  void clamp();
};

template <typename T>
struct ContrastiveLoss {
  Tensor<T> text_to_video;
  Tensor<T> video_to_text;
  Tensor<T> total;  // mean of the two directions
};

/// Symmetric cross-entropy over the in-batch similarity matrix, rows = videos,
/// columns = texts, diagonal = positives. `scale` is a [1] logit multiplier.
template <typename T>
ContrastiveLoss<T> contrastive_loss(const Tensor<T>& similarity, const Tensor<T>& scale);

struct HardNegatives {
  std::vector<std::size_t> text_for_video;  // negative caption index per video
  std::vector<std::size_t> video_for_text;  // negative video index per caption
};

/// Samples one off-diagonal negative per row and per column with probability
/// softmax(scale * S) restricted to j != i. `similarity` is row-major [B, B].
HardNegatives mine_hard_negatives(std::span<const double> similarity, std::size_t batch,
                                  double scale, numerics::Rng& rng);

/// Mean binary cross-entropy of [O, 2] logits (index 1 = match).
template <typename T>
Tensor<T> vtm_loss(const Tensor<T>& logits, std::span<const int> labels);

struct MaskedCaption {
  std::vector<int> tokens;            // after replacement
  std::vector<std::size_t> positions; // selected positions, ascending
  std::vector<int> labels;            // original ids at `positions`
};

struct MaskingOptions {
  double select_prob = 0.15;
  double mask_prob = 0.8;    // of selected: replace with [MASK]
  double random_prob = 0.1;  // of selected: replace with a random word
};

/// Selects non-special tokens independently, then applies the
/// mask / random / keep split. Forces one selection when none was drawn.
/// Throws numerics::ContractError when no token is maskable.
MaskedCaption apply_mlm_mask(std::span<const int> tokens, const datagen::Vocabulary& vocab,
                             numerics::Rng& rng, const MaskingOptions& options = {});

/// Mean cross-entropy over every masked position of every instance.
/// `logits[q]` is [rows, V]; targets[q].positions index its rows.
template <typename T>
Tensor<T> mlm_loss(const std::vector<Tensor<T>>& logits,
                   const std::vector<MaskedCaption>& targets);

struct LossWeights {
  double contrastive = 1.0;
  double vtm = 1.0;
  double mlm = 1.0;
};

/// Weighted sum. Terms with weight 0 are skipped and may be undefined.
template <typename T>
Tensor<T> total_loss(const Tensor<T>& contrastive, const Tensor<T>& vtm, const Tensor<T>& mlm,
                     const LossWeights& weights);

}  // namespace table::objectives
