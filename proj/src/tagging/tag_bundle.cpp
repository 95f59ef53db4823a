#include "table/tagging/tag_bundle.hpp"

#include <algorithm>
#include <stdexcept>

namespace table::tagging {

std::string_view modality_name(Modality m) {
  switch (m) {
    case Modality::object: return "object";
    case Modality::person: return "person";
    case Modality::scene: return "scene";
    case Modality::motion: return "motion";
    case Modality::audio: return "audio";
  }
  return "unknown";
}

Modality parse_modality(std::string_view name) {
  for (Modality m : kModalities) {
    if (modality_name(m) == name) return m;
  }
  throw std::invalid_argument("unknown modality '" + std::string(name) + "'");
}

std::vector<std::string>& TagBundle::operator[](Modality m) {
  switch (m) {
    case Modality::object: return object;
    case Modality::person: return person;
    case Modality::scene: return scene;
    case Modality::motion: return motion;
    case Modality::audio: return audio;
  }
  throw std::invalid_argument("bad modality");
}

const std::vector<std::string>& TagBundle::operator[](Modality m) const {
  return const_cast<TagBundle&>(*this)[m];
}

bool TagBundle::empty() const { return size() == 0; }

std::size_t TagBundle::size() const {
  return object.size() + person.size() + scene.size() + motion.size() + audio.size();
}

void canonicalize(TagBundle& bundle) {
  for (Modality m : kModalities) {
    auto& tags = bundle[m];
    std::sort(tags.begin(), tags.end());
    tags.erase(std::unique(tags.begin(), tags.end()), tags.end());
  }
}

std::string concat_tags(const TagBundle& bundle) {
  TagBundle canonical = bundle;
  canonicalize(canonical);
  std::string out;
  for (Modality m : kModalities) {
    for (const auto& tag : canonical[m]) {
      if (!out.empty()) out += ' ';
      out += tag;
    }
  }
  return out;
}

}  // namespace table::tagging
