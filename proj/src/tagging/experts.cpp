#include "table/tagging/experts.hpp"

#include <algorithm>
#include <array>
#include <map>

#include "table/numerics/random.hpp"

namespace table::tagging {

TagBundle run_experts(const datagen::VideoRecord& record,
                      std::span<const std::shared_ptr<const Expert>> experts,
                      const TaggingOptions& options) {
  if (!(options.conf_threshold >= 0.0f && options.conf_threshold <= 1.0f)) {
    throw ConfigurationError("confidence threshold must lie in [0, 1]");
  }
  std::array<bool, kModalities.size()> seen{};
  for (const auto& expert : experts) {
    auto& slot = seen[static_cast<std::size_t>(expert->modality())];
    if (slot) {
      throw ConfigurationError("duplicate expert for modality " +
                               std::string(modality_name(expert->modality())));
    }
    slot = true;
  }

  TagBundle bundle;
  for (const auto& expert : experts) {
    const ExpertOutput output = expert->run(record);
    std::map<std::string, float> best;
    for (const auto& c : output.candidates) {
      if (c.confidence < options.conf_threshold) continue;
      auto [it, inserted] = best.emplace(c.tag, c.confidence);
      if (!inserted) it->second = std::max(it->second, c.confidence);
    }
    std::vector<std::pair<std::string, float>> ranked(best.begin(), best.end());
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    if (ranked.size() > options.quota) ranked.resize(options.quota);
    auto& tags = bundle[expert->modality()];
    for (auto& [tag, conf] : ranked) tags.push_back(tag);
  }
  canonicalize(bundle);
  return bundle;
}

SyntheticExpert::SyntheticExpert(Modality modality, double drop_prob, double distractor_prob,
                                 std::uint64_t seed)
    : modality_(modality),
      drop_prob_(drop_prob),
      distractor_prob_(distractor_prob),
      seed_(seed) {
  if (!(drop_prob >= 0.0 && drop_prob <= 1.0) ||
      !(distractor_prob >= 0.0 && distractor_prob <= 1.0)) {
    throw ConfigurationError("synthetic expert probabilities must lie in [0, 1]");
  }
}

ExpertOutput SyntheticExpert::run(const datagen::VideoRecord& record) const {
  ExpertOutput out{modality_, {}};
  if (!record.factors) return out;
  numerics::Rng rng(numerics::derive_seed(seed_, numerics::fnv1a(record.id)));
  // Fixed draw order keeps the stream aligned regardless of outcomes.
  const double drop_u = rng.uniform();
  const double true_conf = rng.uniform(0.6, 1.0);
  const double distract_u = rng.uniform();
  const std::size_t distract_pick = rng.below(datagen::distractor_words().size());
  const double distract_conf = rng.uniform(0.3, 0.7);

  if (!(drop_u < drop_prob_)) {
    out.candidates.push_back(
        {datagen::factor_word(*record.factors, modality_), static_cast<float>(true_conf)});
  }
  if (distract_u < distractor_prob_) {
    out.candidates.push_back(
        {datagen::distractor_words()[distract_pick], static_cast<float>(distract_conf)});
  }
  return out;
}

std::vector<std::shared_ptr<const Expert>> synthetic_experts(double drop_prob,
                                                             double distractor_prob,
                                                             std::uint64_t seed) {
  std::vector<std::shared_ptr<const Expert>> experts;
  for (Modality m : kModalities) {
    experts.push_back(std::make_shared<SyntheticExpert>(
        m, drop_prob, distractor_prob,
        numerics::derive_seed(seed, 1000 + static_cast<std::uint64_t>(m))));
  }
  return experts;
}

}  // namespace table::tagging
