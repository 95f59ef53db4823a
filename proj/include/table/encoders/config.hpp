#pragma once

#include <cstddef>
#include <string>

#include <nlohmann/json.hpp>

namespace table::encoders {

/// How the tag enters the cross-modal encoder: the single [EOS] overall
/// embedding, or every tag token (for long videos with many frames).
enum class TagTokensMode { overall, all_tokens };

/// Model shape. Defaults are the desk-scale configuration.
struct EncoderConfig {
  std::size_t dim = 64;
  std::size_t heads = 4;
  std::size_t mlp_ratio = 4;
  std::size_t text_layers = 2;
  std::size_t visual_layers = 2;
  std::size_t cross_layers = 2;
  std::size_t max_frames = 4;       // N
  std::size_t max_tag_len = 32;     // K
  std::size_t max_caption_len = 32; // M
  std::size_t raw_frame_dim = 32;
  std::size_t shared_dim = 64;      // output width of the similarity projections
  std::size_t vocab_size = 0;
  TagTokensMode tag_tokens_mode = TagTokensMode::overall;

  std::size_t head_dim() const { return dim / heads; }
  std::size_t max_text_len() const {
    return max_tag_len > max_caption_len ? max_tag_len : max_caption_len;
  }
  /// Throws std::invalid_argument on an inconsistent configuration.
  void validate() const;
};

void to_json(nlohmann::json& j, const EncoderConfig& c);
void from_json(const nlohmann::json& j, EncoderConfig& c);

}  // namespace table::encoders
