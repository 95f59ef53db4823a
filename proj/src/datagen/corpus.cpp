#include "table/datagen/corpus.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>

#include "table/numerics/random.hpp"
#include "table/tagging/experts.hpp"

namespace table::datagen {

using numerics::Rng;
using tagging::Modality;

namespace {

constexpr std::array<Modality, 4> kVisibleModalities = {Modality::object, Modality::person,
                                                        Modality::scene, Modality::motion};

using Table = std::vector<std::vector<float>>;

Table random_table(Rng& rng, std::size_t rows, std::size_t dim) {
  Table t(rows, std::vector<float>(dim));
  for (auto& r : t)
    for (auto& v : r) v = static_cast<float>(rng.normal());
  return t;
}

std::string record_id(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "video%05zu", i);
  return buf;
}

}  // namespace

std::vector<VideoRecord> generate_corpus(std::size_t num, std::uint64_t seed, float noise_sigma,
                                         const CorpusOptions& options) {
  if (num < 1) throw std::invalid_argument("generate_corpus: num must be at least 1");
  const std::size_t n_frames = options.num_frames;
  const std::size_t dim = options.raw_frame_dim;

  Rng table_rng(numerics::derive_seed(seed, 0));
  std::array<Table, 4> factor_tables;
  for (std::size_t k = 0; k < kVisibleModalities.size(); ++k) {
    factor_tables[k] = random_table(table_rng, factor_catalog(kVisibleModalities[k]).size(), dim);
  }
  const Table drift = random_table(table_rng, factor_catalog(Modality::motion).size(), dim);

  const auto experts =
      tagging::synthetic_experts(options.drop_prob, options.distractor_prob,
                                 numerics::derive_seed(seed, 1));
  const tagging::TaggingOptions tag_options{options.conf_threshold, options.tag_quota};

  std::vector<VideoRecord> corpus;
  corpus.reserve(num);
  for (std::size_t i = 0; i < num; ++i) {
    Rng rng(numerics::derive_seed(seed, 2 + i));
    LatentFactors f;
    f.object_id = static_cast<int>(rng.below(factor_catalog(Modality::object).size()));
    f.person_id = static_cast<int>(rng.below(factor_catalog(Modality::person).size()));
    f.scene_id = static_cast<int>(rng.below(factor_catalog(Modality::scene).size()));
    f.motion_id = static_cast<int>(rng.below(factor_catalog(Modality::motion).size()));
    f.audio_id = static_cast<int>(rng.below(factor_catalog(Modality::audio).size()));
    const std::size_t tmpl = rng.below(caption_templates().size());

    VideoRecord record;
    record.id = record_id(i);
    record.factors = f;
    record.caption = render_caption(caption_templates()[tmpl], f);
    record.frames.assign(n_frames, std::vector<float>(dim, 0.0f));
    const double centre = 0.5 * static_cast<double>(n_frames - 1);
    const double span = n_frames > 1 ? static_cast<double>(n_frames - 1) : 1.0;
    for (std::size_t n = 0; n < n_frames; ++n) {
      const double offset = (static_cast<double>(n) - centre) / span;
      auto& frame = record.frames[n];
      for (std::size_t j = 0; j < dim; ++j) {
        double v = 0.0;
        for (std::size_t k = 0; k < kVisibleModalities.size(); ++k) {
          v += factor_tables[k][static_cast<std::size_t>(f[kVisibleModalities[k]])][j];
        }
        v += offset * drift[static_cast<std::size_t>(f.motion_id)][j];
        v += static_cast<double>(noise_sigma) * rng.normal();
        frame[j] = static_cast<float>(v);
      }
    }
    record.tags = tagging::run_experts(record, experts, tag_options);
    corpus.push_back(std::move(record));
  }
  return corpus;
}

Split split_corpus(std::size_t n, double train_frac, std::uint64_t seed) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(numerics::derive_seed(seed, 0x5e11));
  rng.shuffle(order.begin(), order.end());
  const auto n_train = static_cast<std::size_t>(std::llround(train_frac * static_cast<double>(n)));
  Split split;
  split.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  split.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  return split;
}

std::vector<VideoRecord> select(const std::vector<VideoRecord>& corpus,
                                const std::vector<std::size_t>& indices) {
  std::vector<VideoRecord> out;
  out.reserve(indices.size());
  for (auto i : indices) out.push_back(corpus.at(i));
  return out;
}

std::vector<VideoRecord> shuffle_tags(std::vector<VideoRecord> corpus, std::uint64_t seed) {
  std::vector<std::size_t> perm(corpus.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng(numerics::derive_seed(seed, 0x7a65));
  rng.shuffle(perm.begin(), perm.end());
  std::vector<tagging::TagBundle> tags;
  tags.reserve(corpus.size());
  for (auto& r : corpus) tags.push_back(r.tags);
  for (std::size_t i = 0; i < corpus.size(); ++i) corpus[i].tags = tags[perm[i]];
  return corpus;
}

namespace {

nlohmann::json to_json(const VideoRecord& r) {
  nlohmann::json j;
  j["id"] = r.id;
  j["frames"] = r.frames;
  nlohmann::json tags = nlohmann::json::object();
  for (Modality m : tagging::kModalities) tags[std::string(tagging::modality_name(m))] = r.tags[m];
  j["tags"] = std::move(tags);
  j["caption"] = r.caption;
  if (r.factors) {
    j["factors"] = {{"object", r.factors->object_id}, {"person", r.factors->person_id},
                    {"scene", r.factors->scene_id},   {"motion", r.factors->motion_id},
                    {"audio", r.factors->audio_id}};
  }
  return j;
}

VideoRecord from_json(const nlohmann::json& j) {
  VideoRecord r;
  r.id = j.at("id").get<std::string>();
  r.frames = j.at("frames").get<std::vector<std::vector<float>>>();
  const auto& tags = j.at("tags");
  for (Modality m : tagging::kModalities) {
    const std::string key(tagging::modality_name(m));
    if (tags.contains(key)) r.tags[m] = tags.at(key).get<std::vector<std::string>>();
  }
  r.caption = j.at("caption").get<std::string>();
  if (r.caption.empty()) throw std::invalid_argument("empty caption");
  if (r.frames.empty()) throw std::invalid_argument("record has no frames");
  for (const auto& frame : r.frames) {
    if (frame.size() != r.frames.front().size()) throw std::invalid_argument("ragged frames");
    for (float v : frame) {
      if (!std::isfinite(v)) throw std::invalid_argument("non-finite frame value");
    }
  }
  if (j.contains("factors") && !j.at("factors").is_null()) {
    const auto& f = j.at("factors");
    r.factors = LatentFactors{f.at("object").get<int>(), f.at("person").get<int>(),
                              f.at("scene").get<int>(), f.at("motion").get<int>(),
                              f.at("audio").get<int>()};
  }
  return r;
}

}  // namespace

void write_jsonl(const std::filesystem::path& path, const std::vector<VideoRecord>& corpus) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  for (const auto& r : corpus) out << to_json(r).dump() << '\n';
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::vector<VideoRecord> read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<VideoRecord> corpus;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      corpus.push_back(from_json(nlohmann::json::parse(line)));
    } catch (const std::exception& e) {
      throw CorpusParseError(line_no, e.what());
    }
  }
  return corpus;
}

}  // namespace table::datagen
