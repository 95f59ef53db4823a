#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "table/tagging/tag_bundle.hpp"

namespace table::datagen {

/// Indices into the factor catalogs, one per modality.
struct LatentFactors {
  int object_id = 0;
  int person_id = 0;
  int scene_id = 0;
  int motion_id = 0;
  int audio_id = 0;

  int operator[](tagging::Modality m) const;
  bool operator==(const LatentFactors&) const = default;
};

struct VideoRecord {
  std::string id;
  /// N frame-feature vectors of width D_raw.
  std::vector<std::vector<float>> frames;
  tagging::TagBundle tags;
  std::string caption;
  std::optional<LatentFactors> factors;

  bool operator==(const VideoRecord&) const = default;
};

/// Factor words per modality. Catalog sizes: 12 objects, 4 persons, 8 scenes,
/// 10 motions, 8 audio events.
const std::vector<std::string>& factor_catalog(tagging::Modality m);

/// Word for the record's factor in modality `m`.
const std::string& factor_word(const LatentFactors& factors, tagging::Modality m);

/// Caption templates over {object} {person} {scene} {motion} {audio}.
const std::vector<std::string>& caption_templates();

/// Words that never name a factor; used for the vocabulary and as expert noise.
const std::vector<std::string>& distractor_words();

std::string render_caption(std::string_view caption_template, const LatentFactors& factors);

}  // namespace table::datagen
