#include "table/objectives/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "table/numerics/ops.hpp"

namespace table::objectives {

namespace num = table::numerics;
using datagen::SpecialTokens;

template <typename T>
Temperature<T> Temperature<T>::init(double initial_scale) {
  const double clamped = std::clamp(initial_scale, min_scale, max_scale);
  return Temperature{Tensor<T>::from({1}, {static_cast<T>(std::log(clamped))}, true)};
}

template <typename T>
Tensor<T> Temperature<T>::scale() const {
  return num::exp(log_scale);
}

template <typename T>
double Temperature<T>::value() const {
  return std::exp(static_cast<double>(log_scale[0]));
}

template <typename T>
void Temperature<T>::clamp() {
  auto w = log_scale.mutable_data();
  w[0] = std::clamp(w[0], static_cast<T>(std::log(min_scale)), static_cast<T>(std::log(max_scale)));
}

namespace {

template <typename T>
Tensor<T> negative_mean(const Tensor<T>& picked) {
  return num::scale(num::mean_all(picked), T(-1));
}

}  // namespace

template <typename T>
ContrastiveLoss<T> contrastive_loss(const Tensor<T>& similarity, const Tensor<T>& scale) {
  if (similarity.rank() != 2 || similarity.dim(0) != similarity.dim(1)) {
    throw num::ContractError("contrastive_loss: similarity must be square, got " +
                             num::shape_str(similarity.shape()));
  }
  const std::size_t batch = similarity.dim(0);
  std::vector<std::size_t> diagonal(batch);
  for (std::size_t i = 0; i < batch; ++i) diagonal[i] = i * batch + i;

  const auto logits = num::mul_scalar(similarity, scale);
  ContrastiveLoss<T> out;
  // Column i is caption i scored against every video.
  out.text_to_video = negative_mean(num::pick(num::log_softmax(logits, 0), diagonal));
  out.video_to_text = negative_mean(num::pick(num::log_softmax(logits, 1), diagonal));
  out.total = num::scale(num::add(out.text_to_video, out.video_to_text), T(0.5));
  return out;
}

namespace {

std::size_t sample_excluding(const std::vector<double>& scores, std::size_t excluded,
                             double scale, num::Rng& rng) {
  double peak = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < scores.size(); ++j) {
    if (j != excluded) peak = std::max(peak, scale * scores[j]);
  }
  std::vector<double> weights(scores.size(), 0.0);
  double total = 0.0;
  for (std::size_t j = 0; j < scores.size(); ++j) {
    if (j == excluded) continue;
    weights[j] = std::exp(scale * scores[j] - peak);
    total += weights[j];
  }
  const double target = rng.uniform() * total;
  double cumulative = 0.0;
  std::size_t last = excluded;
  for (std::size_t j = 0; j < scores.size(); ++j) {
    if (j == excluded) continue;
    cumulative += weights[j];
    last = j;
    if (target < cumulative) return j;
  }
  return last;
}

}  // namespace

HardNegatives mine_hard_negatives(std::span<const double> similarity, std::size_t batch,
                                  double scale, num::Rng& rng) {
  if (batch < 2) throw num::ContractError("mine_hard_negatives: batch must be >= 2");
  if (similarity.size() != batch * batch) {
    throw num::DimensionError("mine_hard_negatives: expected " + std::to_string(batch) + "x" +
                              std::to_string(batch) + " scores");
  }
  HardNegatives out;
  std::vector<double> line(batch);
  for (std::size_t i = 0; i < batch; ++i) {
    for (std::size_t j = 0; j < batch; ++j) line[j] = similarity[i * batch + j];
    out.text_for_video.push_back(sample_excluding(line, i, scale, rng));
  }
  for (std::size_t i = 0; i < batch; ++i) {
    for (std::size_t j = 0; j < batch; ++j) line[j] = similarity[j * batch + i];
    out.video_for_text.push_back(sample_excluding(line, i, scale, rng));
  }
  return out;
}

template <typename T>
Tensor<T> vtm_loss(const Tensor<T>& logits, std::span<const int> labels) {
  if (logits.rank() != 2 || logits.dim(1) != 2 || logits.dim(0) == 0 ||
      logits.dim(0) != labels.size()) {
    throw num::DimensionError("vtm_loss: logits " + num::shape_str(logits.shape()) + " with " +
                              std::to_string(labels.size()) + " labels");
  }
  std::vector<std::size_t> targets(labels.size());
  for (std::size_t o = 0; o < labels.size(); ++o) {
    if (labels[o] != 0 && labels[o] != 1) throw num::ContractError("vtm_loss: label not 0/1");
    targets[o] = o * 2 + static_cast<std::size_t>(labels[o]);
  }
  return negative_mean(num::pick(num::log_softmax(logits, 1), targets));
}

MaskedCaption apply_mlm_mask(std::span<const int> tokens, const datagen::Vocabulary& vocab,
                             num::Rng& rng, const MaskingOptions& options) {
  std::vector<std::size_t> maskable;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (!datagen::Vocabulary::is_special(tokens[i])) maskable.push_back(i);
  }
  if (maskable.empty()) throw num::ContractError("apply_mlm_mask: no maskable token");
  const auto words = static_cast<int>(vocab.size()) - SpecialTokens::count;

  MaskedCaption out;
  out.tokens.assign(tokens.begin(), tokens.end());
  for (std::size_t pos : maskable) {
    if (!rng.bernoulli(options.select_prob)) continue;
    out.positions.push_back(pos);
    out.labels.push_back(tokens[pos]);
    const double action = rng.uniform();
    if (action < options.mask_prob) {
      out.tokens[pos] = SpecialTokens::mask;
    } else if (action < options.mask_prob + options.random_prob) {
      out.tokens[pos] = SpecialTokens::count + static_cast<int>(rng.below(words));
    }
  }
  if (out.positions.empty()) {
    const std::size_t pos = maskable[rng.below(maskable.size())];
    out.positions.push_back(pos);
    out.labels.push_back(tokens[pos]);
    out.tokens[pos] = SpecialTokens::mask;
  }
  return out;
}

template <typename T>
Tensor<T> mlm_loss(const std::vector<Tensor<T>>& logits,
                   const std::vector<MaskedCaption>& targets) {
  if (logits.size() != targets.size()) {
    throw num::DimensionError("mlm_loss: logits and targets differ in count");
  }
  std::vector<Tensor<T>> picked;
  for (std::size_t q = 0; q < logits.size(); ++q) {
    const auto& target = targets[q];
    if (target.positions.empty()) continue;
    if (logits[q].rank() != 2) throw num::DimensionError("mlm_loss: logits must be [rows, V]");
    const std::size_t rows = logits[q].dim(0), vocab = logits[q].dim(1);
    std::vector<std::size_t> flat;
    for (std::size_t k = 0; k < target.positions.size(); ++k) {
      const auto label = target.labels.at(k);
      if (target.positions[k] >= rows || label < 0 || static_cast<std::size_t>(label) >= vocab) {
        throw num::DimensionError("mlm_loss: position or label out of range");
      }
      flat.push_back(target.positions[k] * vocab + static_cast<std::size_t>(label));
    }
    picked.push_back(num::pick(num::log_softmax(logits[q], 1), flat));
  }
  if (picked.empty()) throw num::ContractError("mlm_loss: no masked positions");
  return negative_mean(num::concat(picked, 0));
}

template <typename T>
Tensor<T> total_loss(const Tensor<T>& contrastive, const Tensor<T>& vtm, const Tensor<T>& mlm,
                     const LossWeights& weights) {
  Tensor<T> total;
  const auto accumulate = [&](const Tensor<T>& term, double weight) {
    if (weight == 0.0) return;
    const auto weighted = weight == 1.0 ? term : num::scale(term, static_cast<T>(weight));
    total = total.defined() ? num::add(total, weighted) : weighted;
  };
  accumulate(contrastive, weights.contrastive);
  accumulate(vtm, weights.vtm);
  accumulate(mlm, weights.mlm);
  if (!total.defined()) throw num::ContractError("total_loss: every weight is zero");
  return total;
}

#define TABLE_INSTANTIATE(T)                                                              \
  template struct Temperature<T>;                                                        \
  template ContrastiveLoss<T> contrastive_loss(const Tensor<T>&, const Tensor<T>&);      \
  template Tensor<T> vtm_loss(const Tensor<T>&, std::span<const int>);                   \
  template Tensor<T> mlm_loss(const std::vector<Tensor<T>>&,                             \
                              const std::vector<MaskedCaption>&);                        \
  template Tensor<T> total_loss(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,    \
                                const LossWeights&);

TABLE_INSTANTIATE(float)
TABLE_INSTANTIATE(double)

#undef TABLE_INSTANTIATE

}  // namespace table::objectives
