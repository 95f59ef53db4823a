#pragma once

#include <stdexcept>
#include <vector>

#include "table/datagen/record.hpp"
#include "table/datagen/vocabulary.hpp"
#include "table/evalcli/metrics.hpp"
#include "table/evalcli/rollout.hpp"
#include "table/fusion/model.hpp"

namespace table::evalcli {

class VocabularyMismatchError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Throws VocabularyMismatchError naming the first corpus word (caption or
/// tag) that the vocabulary lacks.
void check_vocabulary(const std::vector<datagen::VideoRecord>& corpus,
                      const datagen::Vocabulary& vocab);

/// Video-by-caption similarities from the tag-guided video path and the
/// caption path; rows = videos, columns = captions.
ScoreMatrix similarity_scores(const fusion::ModelParams<float>& params,
                              const datagen::Vocabulary& vocab,
                              const std::vector<datagen::VideoRecord>& corpus);

struct EvalOptions {
  bool dsl = false;
  double dsl_temperature = 100.0;
};

struct EvalResult {
  RetrievalReport text_to_video;
  RetrievalReport video_to_text;
};

/// Both retrieval directions with record i's caption as the truth for video i.
EvalResult evaluate_scores(const ScoreMatrix& video_by_caption, const EvalOptions& options = {});

/// Encodes the corpus and reports both directions. Needs at least 2 records.
EvalResult evaluate(const fusion::ModelParams<float>& params, const datagen::Vocabulary& vocab,
                    const std::vector<datagen::VideoRecord>& corpus,
                    const EvalOptions& options = {});

/// Attention of the tag-guiding encoder for one record.
AttentionTrace trace_record(const fusion::ModelParams<float>& params,
                            const datagen::Vocabulary& vocab, const datagen::VideoRecord& record);

}  // namespace table::evalcli
