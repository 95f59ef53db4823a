#include "table/encoders/config.hpp"

#include <stdexcept>

namespace table::encoders {

void EncoderConfig::validate() const {
  if (dim == 0 || heads == 0 || dim % heads != 0) {
    throw std::invalid_argument("dim must be a positive multiple of heads");
  }
  if (mlp_ratio == 0 || max_frames == 0 || max_tag_len < 3 || max_caption_len < 3 ||
      raw_frame_dim == 0 || shared_dim == 0) {
    throw std::invalid_argument("encoder lengths and widths must be positive (text lengths >= 3)");
  }
  if (vocab_size <= 6) throw std::invalid_argument("vocab_size must exceed the special tokens");
}

void to_json(nlohmann::json& j, const EncoderConfig& c) {
  j = nlohmann::json{{"dim", c.dim},
                     {"heads", c.heads},
                     {"mlp_ratio", c.mlp_ratio},
                     {"text_layers", c.text_layers},
                     {"visual_layers", c.visual_layers},
                     {"cross_layers", c.cross_layers},
                     {"max_frames", c.max_frames},
                     {"max_tag_len", c.max_tag_len},
                     {"max_caption_len", c.max_caption_len},
                     {"raw_frame_dim", c.raw_frame_dim},
                     {"shared_dim", c.shared_dim},
                     {"vocab_size", c.vocab_size},
                     {"tag_tokens_mode",
                      c.tag_tokens_mode == TagTokensMode::overall ? "overall" : "all_tokens"}};
}

void from_json(const nlohmann::json& j, EncoderConfig& c) {
  EncoderConfig d;
  c.dim = j.value("dim", d.dim);
  c.heads = j.value("heads", d.heads);
  c.mlp_ratio = j.value("mlp_ratio", d.mlp_ratio);
  c.text_layers = j.value("text_layers", d.text_layers);
  c.visual_layers = j.value("visual_layers", d.visual_layers);
  c.cross_layers = j.value("cross_layers", d.cross_layers);
  c.max_frames = j.value("max_frames", d.max_frames);
  c.max_tag_len = j.value("max_tag_len", d.max_tag_len);
  c.max_caption_len = j.value("max_caption_len", d.max_caption_len);
  c.raw_frame_dim = j.value("raw_frame_dim", d.raw_frame_dim);
  c.shared_dim = j.value("shared_dim", d.shared_dim);
  c.vocab_size = j.value("vocab_size", d.vocab_size);
  const std::string mode = j.value("tag_tokens_mode", std::string("overall"));
  if (mode == "overall") {
    c.tag_tokens_mode = TagTokensMode::overall;
  } else if (mode == "all_tokens") {
    c.tag_tokens_mode = TagTokensMode::all_tokens;
  } else {
    throw std::invalid_argument("unknown tag_tokens_mode '" + mode + "'");
  }
}

}  // namespace table::encoders
