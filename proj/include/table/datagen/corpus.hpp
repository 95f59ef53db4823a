#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <vector>

#include "table/datagen/record.hpp"

namespace table::datagen {

struct CorpusOptions {
  std::size_t num_frames = 4;
  std::size_t raw_frame_dim = 32;
  double drop_prob = 0.1;
  double distractor_prob = 0.1;
  float conf_threshold = 0.5f;
  std::size_t tag_quota = 4;
};

/// Procedural corpus whose frames, tags and captions share latent factors.
///
/// Frame n of a record is the sum of frozen random embeddings of its object,
/// person, scene and motion factors, plus a motion-specific drift scaled by
/// the frame's offset from the clip centre, plus N(0, noise_sigma²) noise.
/// The audio factor is not visible in frames; it reaches the model only
/// through tags and some captions.
std::vector<VideoRecord> generate_corpus(std::size_t num, std::uint64_t seed, float noise_sigma,
                                         const CorpusOptions& options = {});

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Seeded shuffle, first round(train_frac * n) indices to train.
Split split_corpus(std::size_t n, double train_frac, std::uint64_t seed);

std::vector<VideoRecord> select(const std::vector<VideoRecord>& corpus,
                                const std::vector<std::size_t>& indices);

/// Returns a copy where each record carries the tags of another record
/// (seeded permutation), destroying the tag-caption correspondence.
std::vector<VideoRecord> shuffle_tags(std::vector<VideoRecord> corpus, std::uint64_t seed);

class CorpusParseError : public std::runtime_error {
 public:
  CorpusParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// One JSON object per line: id, frames, tags, caption, optional factors.
void write_jsonl(const std::filesystem::path& path, const std::vector<VideoRecord>& corpus);
std::vector<VideoRecord> read_jsonl(const std::filesystem::path& path);

}  // namespace table::datagen
