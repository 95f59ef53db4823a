#include "table/trainer/trainer.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "table/evalcli/evaluate.hpp"
#include "table/numerics/ops.hpp"
#include "table/trainer/optimizer.hpp"

namespace table::trainer {

namespace num = table::numerics;
using datagen::VideoRecord;

void TrainConfig::validate() const {
  if (epochs == 0) throw std::invalid_argument("epochs must be >= 1");
  if (batch_size < 2) throw std::invalid_argument("batch_size must be >= 2 for negative mining");
  if (!(lr_encoders >= 0.0) || !(lr_cross >= 0.0)) {
    throw std::invalid_argument("learning rates must be non-negative");
  }
  if (!(warmup_frac >= 0.0 && warmup_frac <= 1.0)) {
    throw std::invalid_argument("warmup_frac must lie in [0, 1]");
  }
  if (!(train_frac > 0.0 && train_frac <= 1.0)) {
    throw std::invalid_argument("train_frac must lie in (0, 1]");
  }
  if (!(grad_clip > 0.0)) throw std::invalid_argument("grad_clip must be > 0");
  if (weights.contrastive < 0 || weights.vtm < 0 || weights.mlm < 0) {
    throw std::invalid_argument("loss weights must be non-negative");
  }
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = nlohmann::json{{"epochs", c.epochs},
                     {"batch_size", c.batch_size},
                     {"lr_encoders", c.lr_encoders},
                     {"lr_cross", c.lr_cross},
                     {"warmup_frac", c.warmup_frac},
                     {"train_frac", c.train_frac},
                     {"grad_clip", c.grad_clip},
                     {"seed", c.seed},
                     {"loss_weights",
                      {{"contrastive", c.weights.contrastive},
                       {"vtm", c.weights.vtm},
                       {"mlm", c.weights.mlm}}},
                     {"mining_scale", c.mining_scale},
                     {"model", c.model}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
  const TrainConfig d;
  c.epochs = j.value("epochs", d.epochs);
  c.batch_size = j.value("batch_size", d.batch_size);
  c.lr_encoders = j.value("lr_encoders", d.lr_encoders);
  c.lr_cross = j.value("lr_cross", d.lr_cross);
  c.warmup_frac = j.value("warmup_frac", d.warmup_frac);
  c.train_frac = j.value("train_frac", d.train_frac);
  c.grad_clip = j.value("grad_clip", d.grad_clip);
  c.seed = j.value("seed", d.seed);
  const auto w = j.value("loss_weights", nlohmann::json::object());
  c.weights.contrastive = w.value("contrastive", d.weights.contrastive);
  c.weights.vtm = w.value("vtm", d.weights.vtm);
  c.weights.mlm = w.value("mlm", d.weights.mlm);
  c.mining_scale = j.value("mining_scale", d.mining_scale);
  c.model = j.contains("model") ? j.at("model").get<encoders::EncoderConfig>() : d.model;
}

TrainConfig load_train_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  TrainConfig config = nlohmann::json::parse(in).get<TrainConfig>();
  config.validate();
  return config;
}

BatchForward forward_batch(const fusion::ModelParams<float>& params,
                           const datagen::Vocabulary& vocab,
                           const std::vector<const VideoRecord*>& batch, const TrainConfig& config,
                           num::Rng& rng) {
  const auto& model = params.config;
  const std::size_t b = batch.size();
  std::vector<fusion::PreparedRecord> prepared;
  std::vector<fusion::VideoForward<float>> videos;
  std::vector<encoders::TextEncoding<float>> captions;
  std::vector<Tensor<float>> video_reprs, caption_reprs;
  for (const auto* record : batch) {
    prepared.push_back(fusion::prepare_record(*record, vocab, model));
    videos.push_back(
        fusion::encode_video<float>(prepared.back().frames, prepared.back().tag_tokens, params));
    captions.push_back(fusion::encode_caption<float>(prepared.back().caption_tokens, params));
    video_reprs.push_back(videos.back().pooled.combined);
    caption_reprs.push_back(captions.back().overall);
  }

  BatchForward out;
  const auto similarity = fusion::similarity_matrix(num::stack(video_reprs),
                                                    num::stack(caption_reprs), params.projection);
  out.contrastive = objectives::contrastive_loss(similarity, params.temperature.scale());

  const auto joint_pass = [&](std::size_t video, const encoders::TextEncoding<float>& text) {
    return fusion::joint_encode(videos[video].frames, videos[video].tag_rows, text.sequence,
                                text.length, params.cross, model);
  };

  if (config.weights.vtm != 0.0) {
    const std::vector<double> scores(similarity.data().begin(), similarity.data().end());
    const auto negatives = objectives::mine_hard_negatives(scores, b, config.mining_scale, rng);
    std::vector<Tensor<float>> logits;
    std::vector<int> labels;
    for (std::size_t i = 0; i < b; ++i) {
      logits.push_back(fusion::vtm_head(joint_pass(i, captions[i]).joint, params.cross));
      labels.push_back(1);
      logits.push_back(fusion::vtm_head(
          joint_pass(i, captions[negatives.text_for_video[i]]).joint, params.cross));
      labels.push_back(0);
      logits.push_back(fusion::vtm_head(
          joint_pass(negatives.video_for_text[i], captions[i]).joint, params.cross));
      labels.push_back(0);
    }
    out.vtm = objectives::vtm_loss(num::stack(logits), labels);
  }

  if (config.weights.mlm != 0.0) {
    std::vector<Tensor<float>> logits;
    std::vector<objectives::MaskedCaption> targets;
    for (std::size_t i = 0; i < b; ++i) {
      auto masked = objectives::apply_mlm_mask(prepared[i].caption_tokens, vocab, rng);
      const auto text = fusion::encode_caption<float>(masked.tokens, params);
      const auto joint = joint_pass(i, text);
      // Only the masked rows need vocabulary logits.
      std::vector<Tensor<float>> rows;
      for (std::size_t pos : masked.positions) rows.push_back(num::row(joint.text_positions, pos));
      logits.push_back(fusion::mlm_head(num::stack(rows), params.cross));
      for (std::size_t k = 0; k < masked.positions.size(); ++k) masked.positions[k] = k;
      targets.push_back(std::move(masked));
    }
    out.mlm = objectives::mlm_loss(logits, targets);
  }

  out.total = objectives::total_loss(out.contrastive.total, out.vtm, out.mlm, config.weights);
  return out;
}

namespace {

std::vector<std::vector<const VideoRecord*>> make_batches(const std::vector<VideoRecord>& corpus,
                                                          std::vector<std::size_t> indices,
                                                          std::size_t batch_size, num::Rng& rng) {
  rng.shuffle(indices.begin(), indices.end());
  std::vector<std::vector<const VideoRecord*>> batches;
  for (std::size_t start = 0; start < indices.size(); start += batch_size) {
    const std::size_t end = std::min(start + batch_size, indices.size());
    if (end - start < 2) break;  // a single record has no in-batch negative
    std::vector<const VideoRecord*> batch;
    for (std::size_t k = start; k < end; ++k) batch.push_back(&corpus[indices[k]]);
    batches.push_back(std::move(batch));
  }
  return batches;
}

std::size_t batches_per_epoch(std::size_t n, std::size_t batch_size) {
  const std::size_t full = n / batch_size;
  return full + (n % batch_size >= 2 ? 1 : 0);
}

double scalar_or_zero(const Tensor<float>& t) {
  return t.defined() ? static_cast<double>(t.item()) : 0.0;
}

void write_metrics_csv(const std::filesystem::path& path, const std::vector<EpochMetrics>& rows) {
  std::ofstream out(path);
  out << "epoch,L_con,L_vtm,L_mlm,val_R@1\n";
  out << std::setprecision(9);
  for (const auto& r : rows) {
    out << r.epoch << ',' << r.contrastive << ',' << r.vtm << ',' << r.mlm << ',' << r.val_r1
        << '\n';
  }
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

}  // namespace

TrainResult train(const std::vector<VideoRecord>& corpus, const datagen::Vocabulary& vocab,
                  const TrainConfig& config, const TrainOptions& options) {
  config.validate();
  evalcli::check_vocabulary(corpus, vocab);

  auto model_config = config.model;
  model_config.vocab_size = vocab.size();
  TrainResult result{fusion::ModelParams<float>::init(model_config,
                                                      num::derive_seed(config.seed, 100)),
                     datagen::split_corpus(corpus.size(), config.train_frac, config.seed),
                     {}};
  auto& params = result.params;
  const auto held_out = datagen::select(corpus, result.split.test);
  if (result.split.train.size() < 2) {
    throw num::ContractError("train: the training split needs at least 2 records");
  }
  if (options.out_dir) std::filesystem::create_directories(*options.out_dir);

  Adam adam(params);
  auto tensors = params.parameters();
  const std::size_t total_steps =
      config.epochs * batches_per_epoch(result.split.train.size(), config.batch_size);
  num::Rng objective_rng(num::derive_seed(config.seed, 300));
  std::size_t step = 0;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    num::Rng batch_rng(num::derive_seed(config.seed, 200 + epoch));
    const auto batches = make_batches(corpus, result.split.train, config.batch_size, batch_rng);
    EpochMetrics metrics;
    metrics.epoch = epoch;
    for (std::size_t k = 0; k < batches.size(); ++k, ++step) {
      zero_grads(tensors);
      num::Tape<float> tape;
      StepLosses losses;
      try {
        num::TapeScope<float> scope(tape);
        const auto forward = forward_batch(params, vocab, batches[k], config, objective_rng);
        losses = {scalar_or_zero(forward.contrastive.total), scalar_or_zero(forward.vtm),
                  scalar_or_zero(forward.mlm), scalar_or_zero(forward.total)};
        if (!std::isfinite(losses.total)) throw num::NumericError("non-finite total loss");
        num::backward(forward.total);
      } catch (const num::NumericError& e) {
        std::ostringstream msg;
        msg << "training diverged at epoch " << epoch << ", step " << k + 1 << " (global "
            << step + 1 << "), temperature " << params.temperature.value() << ", lambda "
            << params.cross.lambda[0] << ": " << e.what();
        throw TrainingDiverged(msg.str());
      }
      clip_grad_norm(tensors, config.grad_clip);
      adam.step(lr_schedule(step + 1, total_steps + 1, config.lr_encoders, config.warmup_frac),
                lr_schedule(step + 1, total_steps + 1, config.lr_cross, config.warmup_frac));
      params.temperature.clamp();

      metrics.contrastive += losses.contrastive;
      metrics.vtm += losses.vtm;
      metrics.mlm += losses.mlm;
      metrics.total += losses.total;
    }
    const auto n = static_cast<double>(std::max<std::size_t>(batches.size(), 1));
    metrics.contrastive /= n;
    metrics.vtm /= n;
    metrics.mlm /= n;
    metrics.total /= n;
    if (held_out.size() >= 2) {
      metrics.val_r1 = evalcli::evaluate(params, vocab, held_out).text_to_video.r1;
    }
    result.history.push_back(metrics);

    if (options.out_dir) {
      const nlohmann::json meta{{"epoch", epoch}, {"train_config", config}};
      fusion::save_checkpoint(*options.out_dir / ("checkpoint_epoch" + std::to_string(epoch) +
                                                  ".tbl"),
                              params, vocab, meta);
      write_metrics_csv(*options.out_dir / "metrics.csv", result.history);
    }
    if (options.on_epoch) options.on_epoch(metrics);
  }
  zero_grads(tensors);
  if (options.out_dir) {
    const nlohmann::json meta{{"epoch", config.epochs}, {"train_config", config}};
    fusion::save_checkpoint(*options.out_dir / "checkpoint.tbl", params, vocab, meta);
  }
  return result;
}

}  // namespace table::trainer
