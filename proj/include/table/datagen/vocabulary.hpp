#pragma once

#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace table::datagen {

/// Reserved ids, identical for every vocabulary.
struct SpecialTokens {
  static constexpr int pad = 0;
  static constexpr int bos = 1;
  static constexpr int eos = 2;
  static constexpr int mask = 3;
  static constexpr int sep = 4;
  static constexpr int unk = 5;
  static constexpr int count = 6;
};

class Vocabulary {
 public:
  /// Specials followed by `words` in order (duplicates ignored).
  explicit Vocabulary(const std::vector<std::string>& words);

  /// Factor catalog words, template words and the distractor list.
  static Vocabulary standard();

  std::size_t size() const { return tokens_.size(); }
  /// Id of `word`, or [UNK].
  int id(std::string_view word) const;
  bool contains(std::string_view word) const;
  const std::string& token(int id) const;
  static bool is_special(int id) { return id >= 0 && id < SpecialTokens::count; }
  /// Every token including specials, indexed by id.
  const std::vector<std::string>& tokens() const { return tokens_; }

  bool operator==(const Vocabulary& other) const { return tokens_ == other.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

/// Lowercases and whitespace-splits `text`.
std::vector<std::string> split_words(std::string_view text);

/// [BOS] ids [EOS] then [PAD] up to max_len. Truncation keeps [EOS] last.
std::vector<int> tokenize(std::string_view text, const Vocabulary& vocab, std::size_t max_len);

/// Space-joined non-special tokens.
std::string detokenize(const std::vector<int>& ids, const Vocabulary& vocab);

/// Number of positions before padding (through [EOS] inclusive).
std::size_t content_length(const std::vector<int>& ids);

}  // namespace table::datagen
