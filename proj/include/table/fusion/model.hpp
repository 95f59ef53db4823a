#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "table/datagen/record.hpp"
#include "table/datagen/vocabulary.hpp"
#include "table/encoders/encoders.hpp"
#include "table/fusion/fusion.hpp"
#include "table/objectives/losses.hpp"

namespace table::fusion {

/// Learning-rate group of a parameter.
enum class ParamGroup { encoders, cross };

template <typename T>
using GroupVisitor = std::function<void(const std::string&, Tensor<T>&, ParamGroup)>;

/// Every learnable tensor of the model.
template <typename T>
struct ModelParams {
  EncoderConfig config;
  encoders::TextEncoderParams<T> text;
  encoders::VisualEncoderParams<T> visual;
  CrossEncoderParams<T> cross;
  ProjectionParams<T> projection;
  objectives::Temperature<T> temperature;

  static constexpr double initial_scale = 1.0 / 0.07;

  static ModelParams init(const EncoderConfig& config, std::uint64_t seed);

  /// Walks all parameters in a fixed order. Text and visual encoders form the
  /// encoder group; cross-modal blocks, heads, projections and the
  /// temperature form the cross group.
  void visit(const GroupVisitor<T>& f);
  std::vector<Tensor<T>> parameters();
};

/// Token ids and frame tensor of one record.
struct PreparedRecord {
  std::vector<std::vector<float>> frames;
  std::vector<int> tag_tokens;
  std::vector<int> caption_tokens;
};

PreparedRecord prepare_record(const datagen::VideoRecord& record, const datagen::Vocabulary& vocab,
                              const EncoderConfig& config);

template <typename T>
struct VideoForward {
  Tensor<T> frames;    // visual encoder output [N, d]
  Tensor<T> tag_rows;  // [1, d] overall tag embedding, or [k, d] in all-tokens mode
  Tensor<T> fused;     // tag-guided encoder output
  PooledVideo<T> pooled;
};

/// Frames and tags through the visual, text (tag path) and tag-guiding encoders.
template <typename T>
VideoForward<T> encode_video(const std::vector<std::vector<float>>& frames,
                             std::span<const int> tag_tokens, const ModelParams<T>& params,
                             AttentionCapture* capture = nullptr);

template <typename T>
encoders::TextEncoding<T> encode_caption(std::span<const int> caption_tokens,
                                         const ModelParams<T>& params);

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Checkpoint {
  ModelParams<float> params;
  datagen::Vocabulary vocab;
  nlohmann::json meta;
};

/// Stores every parameter plus the encoder config and vocabulary. `meta` is
/// kept under "extra".
void save_checkpoint(const std::filesystem::path& path, ModelParams<float>& params,
                     const datagen::Vocabulary& vocab,
                     const nlohmann::json& meta = nlohmann::json::object());
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace table::fusion
