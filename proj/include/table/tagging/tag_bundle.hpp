#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

namespace table::tagging {

enum class Modality { object, person, scene, motion, audio };

/// Canonical concatenation order.
inline constexpr std::array<Modality, 5> kModalities = {
    Modality::object, Modality::person, Modality::scene, Modality::motion, Modality::audio};

std::string_view modality_name(Modality m);
Modality parse_modality(std::string_view name);

/// Per-modality tag lists. Canonical form: each list deduplicated and sorted.
struct TagBundle {
  std::vector<std::string> object;
  std::vector<std::string> person;
  std::vector<std::string> scene;
  std::vector<std::string> motion;
  std::vector<std::string> audio;

  std::vector<std::string>& operator[](Modality m);
  const std::vector<std::string>& operator[](Modality m) const;

  bool empty() const;
  std::size_t size() const;
  bool operator==(const TagBundle&) const = default;
};

/// Sorts and deduplicates every modality list in place.
void canonicalize(TagBundle& bundle);

/// Joins all tags in object, person, scene, motion, audio order with single
/// spaces. Multi-word tags stay intact.
std::string concat_tags(const TagBundle& bundle);

}  // namespace table::tagging
