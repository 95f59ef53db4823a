#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "table/datagen/record.hpp"
#include "table/tagging/tag_bundle.hpp"

namespace table::tagging {

struct TagCandidate {
  std::string tag;
  float confidence = 0.0f;  // in [0, 1]
};

struct ExpertOutput {
  Modality modality = Modality::object;
  std::vector<TagCandidate> candidates;
};

/// A per-modality tagger. Implementations are pure: the same record always
/// yields the same output.
class Expert {
 public:
  virtual ~Expert() = default;
  virtual Modality modality() const = 0;
  virtual ExpertOutput run(const datagen::VideoRecord& record) const = 0;
};

class ConfigurationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct TaggingOptions {
  float conf_threshold = 0.5f;
  std::size_t quota = 4;
};

/// Runs every expert, drops candidates below the threshold, keeps the highest
/// confidence copy of each tag, truncates to the quota by confidence, and
/// returns the canonical bundle. Modalities without an expert stay empty.
TagBundle run_experts(const datagen::VideoRecord& record,
                      std::span<const std::shared_ptr<const Expert>> experts,
                      const TaggingOptions& options = {});

/// Stand-in for a pretrained expert. Emits the record's true factor word with
/// confidence U(0.6, 1.0) unless dropped (probability drop_prob), and with
/// probability distractor_prob adds a distractor word at confidence U(0.3, 0.7).
class SyntheticExpert final : public Expert {
 public:
  SyntheticExpert(Modality modality, double drop_prob, double distractor_prob,
                  std::uint64_t seed);

  Modality modality() const override { return modality_; }
  ExpertOutput run(const datagen::VideoRecord& record) const override;

 private:
  Modality modality_;
  double drop_prob_;
  double distractor_prob_;
  std::uint64_t seed_;
};

/// One synthetic expert per modality, seeds derived from `seed`.
std::vector<std::shared_ptr<const Expert>> synthetic_experts(double drop_prob,
                                                             double distractor_prob,
                                                             std::uint64_t seed);

}  // namespace table::tagging
