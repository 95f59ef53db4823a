#include "table/datagen/vocabulary.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>
#include <stdexcept>

#include "table/datagen/record.hpp"

namespace table::datagen {

Vocabulary::Vocabulary(const std::vector<std::string>& words) {
  tokens_ = {"[PAD]", "[BOS]", "[EOS]", "[MASK]", "[SEP]", "[UNK]"};
  for (std::size_t i = 0; i < tokens_.size(); ++i) index_.emplace(tokens_[i], static_cast<int>(i));
  for (const auto& w : words) {
    if (index_.count(w)) continue;
    index_.emplace(w, static_cast<int>(tokens_.size()));
    tokens_.push_back(w);
  }
}

Vocabulary Vocabulary::standard() {
  std::vector<std::string> words;
  for (auto m : tagging::kModalities) {
    for (const auto& entry : factor_catalog(m)) {
      for (auto& w : split_words(entry)) words.push_back(std::move(w));
    }
  }
  for (const auto& t : caption_templates()) {
    for (auto& w : split_words(t)) {
      if (w.front() != '{') words.push_back(std::move(w));
    }
  }
  for (const auto& w : distractor_words()) words.push_back(w);
  return Vocabulary(words);
}

int Vocabulary::id(std::string_view word) const {
  auto it = index_.find(std::string(word));
  return it == index_.end() ? SpecialTokens::unk : it->second;
}

bool Vocabulary::contains(std::string_view word) const {
  return index_.count(std::string(word)) != 0;
}

const std::string& Vocabulary::token(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
    throw std::out_of_range("token id " + std::to_string(id) + " outside vocabulary");
  }
  return tokens_[static_cast<std::size_t>(id)];
}

std::vector<std::string> split_words(std::string_view text) {
  std::string lowered(text);
  std::transform(lowered.begin(), lowered.end(), lowered.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  std::istringstream in(lowered);
  std::vector<std::string> words;
  for (std::string w; in >> w;) words.push_back(std::move(w));
  return words;
}

std::vector<int> tokenize(std::string_view text, const Vocabulary& vocab, std::size_t max_len) {
  if (max_len < 3) throw std::invalid_argument("tokenize: max_len must be at least 3");
  std::vector<int> ids;
  ids.reserve(max_len);
  ids.push_back(SpecialTokens::bos);
  for (const auto& w : split_words(text)) {
    if (ids.size() + 1 >= max_len) break;
    ids.push_back(vocab.id(w));
  }
  ids.push_back(SpecialTokens::eos);
  ids.resize(max_len, SpecialTokens::pad);
  return ids;
}

std::string detokenize(const std::vector<int>& ids, const Vocabulary& vocab) {
  std::string out;
  for (int id : ids) {
    if (Vocabulary::is_special(id)) continue;
    if (!out.empty()) out += ' ';
    out += vocab.token(id);
  }
  return out;
}

std::size_t content_length(const std::vector<int>& ids) {
  auto it = std::find(ids.begin(), ids.end(), SpecialTokens::eos);
  if (it == ids.end()) return ids.size();
  return static_cast<std::size_t>(it - ids.begin()) + 1;
}

}  // namespace table::datagen
