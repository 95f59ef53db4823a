#include "table/evalcli/evaluate.hpp"

#include <numeric>

#include "table/numerics/ops.hpp"
#include "table/tagging/tag_bundle.hpp"

namespace table::evalcli {

namespace num = table::numerics;
using num::Tensor;

void check_vocabulary(const std::vector<datagen::VideoRecord>& corpus,
                      const datagen::Vocabulary& vocab) {
  const auto check = [&](const std::string& text, const std::string& id) {
    for (const auto& word : datagen::split_words(text)) {
      if (!vocab.contains(word)) {
        throw VocabularyMismatchError("record " + id + ": word '" + word +
                                      "' is not in the checkpoint vocabulary");
      }
    }
  };
  for (const auto& record : corpus) {
    check(record.caption, record.id);
    check(tagging::concat_tags(record.tags), record.id);
  }
}

ScoreMatrix similarity_scores(const fusion::ModelParams<float>& params,
                              const datagen::Vocabulary& vocab,
                              const std::vector<datagen::VideoRecord>& corpus) {
  num::NoGradScope<float> no_grad;
  std::vector<Tensor<float>> videos, captions;
  for (const auto& record : corpus) {
    const auto prepared = fusion::prepare_record(record, vocab, params.config);
    videos.push_back(
        fusion::encode_video<float>(prepared.frames, prepared.tag_tokens, params).pooled.combined);
    captions.push_back(fusion::encode_caption<float>(prepared.caption_tokens, params).overall);
  }
  const auto s =
      fusion::similarity_matrix(num::stack(videos), num::stack(captions), params.projection);
  return ScoreMatrix(corpus.size(), corpus.size(),
                     std::vector<double>(s.data().begin(), s.data().end()));
}

EvalResult evaluate_scores(const ScoreMatrix& video_by_caption, const EvalOptions& options) {
  std::vector<std::size_t> truth(video_by_caption.rows);
  std::iota(truth.begin(), truth.end(), std::size_t{0});
  auto t2v = video_by_caption.transposed();
  auto v2t = video_by_caption;
  if (options.dsl) {
    t2v = dsl_revise(t2v, options.dsl_temperature);
    v2t = dsl_revise(v2t, options.dsl_temperature);
  }
  return EvalResult{compute_metrics(t2v, truth, Direction::text_to_video),
                    compute_metrics(v2t, truth, Direction::video_to_text)};
}

EvalResult evaluate(const fusion::ModelParams<float>& params, const datagen::Vocabulary& vocab,
                    const std::vector<datagen::VideoRecord>& corpus, const EvalOptions& options) {
  if (corpus.size() < 2) throw num::ContractError("evaluate: corpus needs at least 2 records");
  check_vocabulary(corpus, vocab);
  return evaluate_scores(similarity_scores(params, vocab, corpus), options);
}

AttentionTrace trace_record(const fusion::ModelParams<float>& params,
                            const datagen::Vocabulary& vocab, const datagen::VideoRecord& record) {
  check_vocabulary({record}, vocab);
  num::NoGradScope<float> no_grad;
  const auto prepared = fusion::prepare_record(record, vocab, params.config);
  encoders::AttentionCapture capture;
  const auto forward =
      fusion::encode_video<float>(prepared.frames, prepared.tag_tokens, params, &capture);

  std::vector<SlotLabel> labels;
  for (std::size_t n = 0; n < forward.frames.dim(0); ++n) {
    labels.push_back({SlotKind::frame, "frame " + std::to_string(n)});
  }
  const std::size_t tag_rows = forward.tag_rows.dim(0);
  if (tag_rows == 1) {
    labels.push_back({SlotKind::tag, tagging::concat_tags(record.tags)});
  } else {
    for (std::size_t k = 0; k < tag_rows; ++k) {
      labels.push_back({SlotKind::tag, vocab.token(prepared.tag_tokens[k])});
    }
  }
  return AttentionTrace::from_capture(capture, std::move(labels));
}

}  // namespace table::evalcli
