#include "table/fusion/model.hpp"

#include <algorithm>
#include <set>

#include "table/numerics/ops.hpp"
#include "table/numerics/param_file.hpp"
#include "table/tagging/tag_bundle.hpp"

namespace table::fusion {

namespace num = table::numerics;

template <typename T>
ModelParams<T> ModelParams<T>::init(const EncoderConfig& config, std::uint64_t seed) {
  config.validate();
  ModelParams p;
  p.config = config;
  num::Rng text_rng(num::derive_seed(seed, 10));
  num::Rng visual_rng(num::derive_seed(seed, 11));
  num::Rng cross_rng(num::derive_seed(seed, 12));
  num::Rng projection_rng(num::derive_seed(seed, 13));
  p.text = encoders::TextEncoderParams<T>::init(text_rng, config);
  p.visual = encoders::VisualEncoderParams<T>::init(visual_rng, config);
  p.cross = CrossEncoderParams<T>::init(cross_rng, config);
  p.projection = ProjectionParams<T>::init(projection_rng, config);
  p.temperature = objectives::Temperature<T>::init(initial_scale);
  return p;
}

template <typename T>
void ModelParams<T>::visit(const GroupVisitor<T>& f) {
  const auto in = [&](ParamGroup group) {
    return [&f, group](const std::string& name, Tensor<T>& t) { f(name, t, group); };
  };
  text.visit("text", in(ParamGroup::encoders));
  visual.visit("visual", in(ParamGroup::encoders));
  cross.visit("cross", in(ParamGroup::cross));
  projection.visit("projection", in(ParamGroup::cross));
  f("temperature.log_scale", temperature.log_scale, ParamGroup::cross);
}

template <typename T>
std::vector<Tensor<T>> ModelParams<T>::parameters() {
  std::vector<Tensor<T>> out;
  visit([&](const std::string&, Tensor<T>& t, ParamGroup) { out.push_back(t); });
  return out;
}

PreparedRecord prepare_record(const datagen::VideoRecord& record, const datagen::Vocabulary& vocab,
                              const EncoderConfig& config) {
  if (record.frames.size() != config.max_frames) {
    throw num::DimensionError("record " + record.id + ": expected " +
                              std::to_string(config.max_frames) + " frames, got " +
                              std::to_string(record.frames.size()));
  }
  return PreparedRecord{record.frames,
                        datagen::tokenize(tagging::concat_tags(record.tags), vocab,
                                          config.max_tag_len),
                        datagen::tokenize(record.caption, vocab, config.max_caption_len)};
}

template <typename T>
VideoForward<T> encode_video(const std::vector<std::vector<float>>& frames,
                             std::span<const int> tag_tokens, const ModelParams<T>& params,
                             AttentionCapture* capture) {
  const auto& config = params.config;
  VideoForward<T> out;
  out.frames = encoders::encode_frames(encoders::frames_tensor<T>(frames), params.visual, config);
  const auto tag = encoders::encode_text(tag_tokens, params.text, config, encoders::TextPath::tag);
  if (config.tag_tokens_mode == encoders::TagTokensMode::all_tokens) {
    out.tag_rows = num::slice(tag.sequence, 0, 0, tag.length);
  } else {
    out.tag_rows = num::reshape(tag.overall, {1, config.dim});
  }
  out.fused = tg_encode(out.frames, out.tag_rows, params.cross, config, capture);
  out.pooled = pool_and_residual(out.fused, out.frames, params.cross.lambda);
  return out;
}

template <typename T>
encoders::TextEncoding<T> encode_caption(std::span<const int> caption_tokens,
                                         const ModelParams<T>& params) {
  return encoders::encode_text(caption_tokens, params.text, params.config,
                               encoders::TextPath::caption);
}

void save_checkpoint(const std::filesystem::path& path, ModelParams<float>& params,
                     const datagen::Vocabulary& vocab, const nlohmann::json& meta) {
  num::ParamFile file;
  file.meta["config"] = params.config;
  const auto& tokens = vocab.tokens();
  file.meta["vocabulary"] =
      std::vector<std::string>(tokens.begin() + datagen::SpecialTokens::count, tokens.end());
  file.meta["extra"] = meta;
  params.visit([&](const std::string& name, Tensor<float>& t, ParamGroup) {
    file.tensors.push_back(
        num::NamedTensor{name, t.shape(), std::vector<float>(t.data().begin(), t.data().end())});
  });
  write_param_file(path, file);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  const auto file = num::read_param_file(path);
  if (!file.meta.contains("config") || !file.meta.contains("vocabulary")) {
    throw CheckpointError(path.string() + ": missing config or vocabulary");
  }
  const auto config = file.meta.at("config").get<EncoderConfig>();
  datagen::Vocabulary vocab(file.meta.at("vocabulary").get<std::vector<std::string>>());
  if (vocab.size() != config.vocab_size) {
    throw CheckpointError(path.string() + ": vocabulary size does not match config");
  }

  auto params = ModelParams<float>::init(config, 0);
  std::set<std::string> seen;
  params.visit([&](const std::string& name, Tensor<float>& t, ParamGroup) {
    const num::NamedTensor* stored = nullptr;
    try {
      stored = &file.find(name);
    } catch (const num::ParamFileError&) {
      throw CheckpointError(path.string() + ": missing tensor " + name);
    }
    if (stored->shape != t.shape()) {
      throw CheckpointError(path.string() + ": tensor " + name + " has shape " +
                            num::shape_str(stored->shape) + ", expected " +
                            num::shape_str(t.shape()));
    }
    std::copy(stored->values.begin(), stored->values.end(), t.mutable_data().begin());
    seen.insert(name);
  });
  if (seen.size() != file.tensors.size()) {
    throw CheckpointError(path.string() + ": unexpected extra tensors");
  }
  return Checkpoint{std::move(params), std::move(vocab),
                    file.meta.value("extra", nlohmann::json::object())};
}

#define TABLE_INSTANTIATE(T)                                                                  \
  template struct ModelParams<T>;                                                            \
  template VideoForward<T> encode_video(const std::vector<std::vector<float>>&,              \
                                        std::span<const int>, const ModelParams<T>&,         \
                                        AttentionCapture*);                                  \
  template encoders::TextEncoding<T> encode_caption(std::span<const int>,                    \
                                                    const ModelParams<T>&);

TABLE_INSTANTIATE(float)
TABLE_INSTANTIATE(double)

#undef TABLE_INSTANTIATE

}  // namespace table::fusion
