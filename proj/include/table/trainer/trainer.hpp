#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "table/datagen/corpus.hpp"
#include "table/datagen/vocabulary.hpp"
#include "table/fusion/model.hpp"
#include "table/objectives/losses.hpp"

namespace table::trainer {

using numerics::Tensor;

struct TrainConfig {
  std::size_t epochs = 5;
  std::size_t batch_size = 32;
  double lr_encoders = 1e-3;
  double lr_cross = 1e-3;
  double warmup_frac = 0.1;
  double train_frac = 0.8;
  double grad_clip = 1.0;
  std::uint64_t seed = 7;
  objectives::LossWeights weights;
  /// Logit scale of the negative-sampling softmax.
  double mining_scale = 10.0;
  encoders::EncoderConfig model;  // vocab_size is filled from the vocabulary

  /// Throws std::invalid_argument on out-of-range fields.
  void validate() const;
};

void to_json(nlohmann::json& j, const TrainConfig& c);
/// Missing keys keep their defaults.
void from_json(const nlohmann::json& j, TrainConfig& c);

TrainConfig load_train_config(const std::filesystem::path& path);

struct EpochMetrics {
  std::size_t epoch = 0;  // 1-based
  double contrastive = 0.0;
  double vtm = 0.0;
  double mlm = 0.0;
  double total = 0.0;
  double val_r1 = 0.0;  // held-out T2V R@1
};

struct StepLosses {
  double contrastive = 0.0;
  double vtm = 0.0;
  double mlm = 0.0;
  double total = 0.0;
};

/// Raised when a loss turns NaN/Inf; the message names epoch and step.
class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainResult {
  fusion::ModelParams<float> params;
  datagen::Split split;
  std::vector<EpochMetrics> history;
};

struct TrainOptions {
  /// When set, receives metrics.csv, checkpoint_epochN.tbl and checkpoint.tbl.
  std::optional<std::filesystem::path> out_dir;
  /// Called after each epoch.
  std::function<void(const EpochMetrics&)> on_epoch;
};

/// Every objective on one batch of training records, recorded on the active
/// tape. Terms with weight 0 are not computed and stay undefined.
struct BatchForward {
  objectives::ContrastiveLoss<float> contrastive;
  Tensor<float> vtm;
  Tensor<float> mlm;
  Tensor<float> total;
};

BatchForward forward_batch(const fusion::ModelParams<float>& params,
                           const datagen::Vocabulary& vocab,
                           const std::vector<const datagen::VideoRecord*>& batch,
                           const TrainConfig& config, numerics::Rng& rng);

/// Splits the corpus, trains, evaluates the held-out split after each epoch.
TrainResult train(const std::vector<datagen::VideoRecord>& corpus,
                  const datagen::Vocabulary& vocab, const TrainConfig& config,
                  const TrainOptions& options = {});

}  // namespace table::trainer
