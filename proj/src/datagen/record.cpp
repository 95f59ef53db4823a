#include "table/datagen/record.hpp"

#include <stdexcept>

namespace table::datagen {

using tagging::Modality;

int LatentFactors::operator[](Modality m) const {
  switch (m) {
    case Modality::object: return object_id;
    case Modality::person: return person_id;
    case Modality::scene: return scene_id;
    case Modality::motion: return motion_id;
    case Modality::audio: return audio_id;
  }
  throw std::invalid_argument("bad modality");
}

const std::vector<std::string>& factor_catalog(Modality m) {
  static const std::vector<std::string> objects = {
      "bowl", "cup",     "bottle",  "ball",     "guitar",   "phone",
      "book", "knife",   "bicycle", "laptop",   "umbrella", "camera"};
  static const std::vector<std::string> persons = {"man", "woman", "boy", "girl"};
  static const std::vector<std::string> scenes = {"kitchen", "park",    "street", "beach",
                                                  "office",  "stadium", "forest", "studio"};
  static const std::vector<std::string> motions = {"cooking", "running",  "dancing", "singing",
                                                   "talking", "jumping",  "swimming", "driving",
                                                   "reading", "painting"};
  static const std::vector<std::string> audio = {"music",        "applause",       "laughter",
                                                 "speech",       "engine noise",   "crowd cheering",
                                                 "birdsong",     "thunder"};
  switch (m) {
    case Modality::object: return objects;
    case Modality::person: return persons;
    case Modality::scene: return scenes;
    case Modality::motion: return motions;
    case Modality::audio: return audio;
  }
  throw std::invalid_argument("bad modality");
}

const std::string& factor_word(const LatentFactors& factors, Modality m) {
  const auto& catalog = factor_catalog(m);
  const int id = factors[m];
  if (id < 0 || static_cast<std::size_t>(id) >= catalog.size()) {
    throw std::out_of_range("factor id " + std::to_string(id) + " outside the " +
                            std::string(tagging::modality_name(m)) + " catalog");
  }
  return catalog[static_cast<std::size_t>(id)];
}

const std::vector<std::string>& caption_templates() {
  static const std::vector<std::string> templates = {
      "a {person} is {motion} in the {scene} with a {object}",
      "in the {scene} a {person} with a {object} is {motion}",
      "a {person} is {motion} with a {object} while {audio} plays in the {scene}",
      "{audio} as a {person} is {motion} near a {object} in the {scene}",
  };
  return templates;
}

const std::vector<std::string>& distractor_words() {
  static const std::vector<std::string> words = {
      "sky",    "tree",  "car",    "dog",   "cat",    "window", "chair",  "table",  "lamp",
      "door",   "flower", "river", "mountain", "cloud", "train", "boat",  "horse",  "bird",
      "shoe",   "hat",   "shirt",  "clock", "bag",    "pen",    "paper",  "box",    "wall",
      "floor",  "road",  "bridge", "light", "shadow", "water",  "fire",   "stone",  "grass",
      "snow",   "rain",  "wind",   "sand",  "glass",  "metal",  "wood",   "paint",  "screen",
      "button", "wheel", "rope",   "basket", "candle"};
  return words;
}

std::string render_caption(std::string_view caption_template, const LatentFactors& factors) {
  std::string out;
  std::size_t i = 0;
  while (i < caption_template.size()) {
    if (caption_template[i] == '{') {
      const auto close = caption_template.find('}', i);
      if (close == std::string_view::npos) throw std::invalid_argument("unterminated placeholder");
      const auto name = caption_template.substr(i + 1, close - i - 1);
      out += factor_word(factors, tagging::parse_modality(name));
      i = close + 1;
    } else {
      out += caption_template[i++];
    }
  }
  return out;
}

}  // namespace table::datagen
