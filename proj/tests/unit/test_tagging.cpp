#include <gtest/gtest.h>

#include <algorithm>

#include "table/datagen/corpus.hpp"
#include "table/numerics/random.hpp"
#include "table/tagging/experts.hpp"

using namespace table;
using tagging::Modality;

namespace {

class FixedExpert final : public tagging::Expert {
 public:
  FixedExpert(Modality m, std::vector<tagging::TagCandidate> c) : m_(m), c_(std::move(c)) {}
  Modality modality() const override { return m_; }
  tagging::ExpertOutput run(const datagen::VideoRecord&) const override { return {m_, c_}; }

 private:
  Modality m_;
  std::vector<tagging::TagCandidate> c_;
};

datagen::VideoRecord record_with(datagen::LatentFactors f, std::string id) {
  datagen::VideoRecord r;
  r.id = std::move(id);
  r.frames.assign(4, std::vector<float>(32, 0.0f));
  r.caption = datagen::render_caption(datagen::caption_templates()[0], f);
  r.factors = f;
  return r;
}

}  // namespace

TEST(ConcatTags, CanonicalModalityOrder) {
  tagging::TagBundle b;
  b.audio = {};
  b.motion = {"cooking"};
  b.scene = {"kitchen"};
  b.person = {"woman"};
  b.object = {"bowl"};
  EXPECT_EQ(tagging::concat_tags(b), "bowl woman kitchen cooking");
}

TEST(ConcatTags, EmptyBundleGivesEmptyString) {
  EXPECT_EQ(tagging::concat_tags(tagging::TagBundle{}), "");
}

TEST(ConcatTags, MultiWordTagsStayIntact) {
  tagging::TagBundle b;
  b.motion = {"marinating a chicken"};
  b.audio = {"engine noise"};
  EXPECT_EQ(tagging::concat_tags(b), "marinating a chicken engine noise");
}

TEST(ConcatTags, InsertionOrderDoesNotMatter) {
  const auto run = [](std::vector<tagging::TagCandidate> c) {
    std::vector<std::shared_ptr<const tagging::Expert>> experts{
        std::make_shared<FixedExpert>(Modality::object, std::move(c))};
    return tagging::concat_tags(tagging::run_experts(record_with({}, "r"), experts));
  };
  EXPECT_EQ(run({{"cup", 0.9f}, {"bowl", 0.8f}, {"bottle", 0.7f}}),
            run({{"bottle", 0.7f}, {"cup", 0.9f}, {"bowl", 0.8f}}));
  EXPECT_EQ(run({{"cup", 0.9f}, {"bowl", 0.8f}}), "bowl cup");
}

TEST(RunExperts, NoExpertsGiveEmptyBundle) {
  const auto bundle = tagging::run_experts(record_with({}, "r"), {});
  EXPECT_TRUE(bundle.empty());
}

TEST(RunExperts, ThresholdDropsLowConfidence) {
  std::vector<std::shared_ptr<const tagging::Expert>> experts{std::make_shared<FixedExpert>(
      Modality::object, std::vector<tagging::TagCandidate>{{"bowl", 0.9f}, {"cup", 0.3f}})};
  const auto bundle = tagging::run_experts(record_with({}, "r"), experts, {0.5f, 4});
  EXPECT_EQ(bundle.object, (std::vector<std::string>{"bowl"}));
  EXPECT_TRUE(bundle.person.empty());
}

TEST(RunExperts, DeduplicatesAndAppliesQuotaByConfidence) {
  std::vector<std::shared_ptr<const tagging::Expert>> experts{std::make_shared<FixedExpert>(
      Modality::scene, std::vector<tagging::TagCandidate>{{"park", 0.6f},
                                                          {"beach", 0.95f},
                                                          {"park", 0.99f},
                                                          {"street", 0.7f},
                                                          {"forest", 0.8f},
                                                          {"office", 0.55f}})};
  const auto bundle = tagging::run_experts(record_with({}, "r"), experts, {0.5f, 3});
  EXPECT_EQ(bundle.scene, (std::vector<std::string>{"beach", "forest", "park"}));
}

TEST(RunExperts, DuplicateModalityIsConfigurationError) {
  std::vector<std::shared_ptr<const tagging::Expert>> experts{
      std::make_shared<FixedExpert>(Modality::object, std::vector<tagging::TagCandidate>{}),
      std::make_shared<FixedExpert>(Modality::object, std::vector<tagging::TagCandidate>{})};
  EXPECT_THROW(tagging::run_experts(record_with({}, "r"), experts), tagging::ConfigurationError);
}

TEST(SyntheticExpert, NoNoiseReproducesFactors) {
  const auto experts = tagging::synthetic_experts(0.0, 0.0, 42);
  for (int i = 0; i < 50; ++i) {
    datagen::LatentFactors f{i % 12, i % 4, i % 8, i % 10, i % 8};
    const auto bundle = tagging::run_experts(record_with(f, "v" + std::to_string(i)), experts);
    for (auto m : tagging::kModalities) {
      EXPECT_EQ(bundle[m], (std::vector<std::string>{datagen::factor_word(f, m)}));
    }
  }
}

TEST(SyntheticExpert, AlwaysDropGivesEmpty) {
  const auto experts = tagging::synthetic_experts(1.0, 0.0, 42);
  for (int i = 0; i < 50; ++i) {
    const auto bundle =
        tagging::run_experts(record_with({1, 1, 1, 1, 1}, "v" + std::to_string(i)), experts);
    EXPECT_TRUE(bundle.empty());
  }
}

TEST(SyntheticExpert, BundleIsFactorsMinusDrops) {
  // With distractors off every surviving tag must be the true factor word.
  const auto corpus = datagen::generate_corpus(64, 5, 0.1f, {.distractor_prob = 0.0});
  const auto experts = tagging::synthetic_experts(0.1, 0.0, table::numerics::derive_seed(5, 1));
  std::size_t dropped = 0;
  for (const auto& r : corpus) {
    const auto bundle = tagging::run_experts(r, experts);
    EXPECT_EQ(bundle, r.tags);
    for (auto m : tagging::kModalities) {
      if (bundle[m].empty()) {
        ++dropped;
      } else {
        EXPECT_EQ(bundle[m], (std::vector<std::string>{datagen::factor_word(*r.factors, m)}));
      }
    }
  }
  EXPECT_GT(dropped, 0u);
}

TEST(SyntheticExpert, RetentionRateMonteCarlo) {
  tagging::SyntheticExpert expert(Modality::motion, 0.2, 0.0, 9);
  std::size_t kept = 0;
  const std::size_t n = 10000;
  for (std::size_t i = 0; i < n; ++i) {
    const auto out = expert.run(record_with({0, 0, 0, static_cast<int>(i % 10), 0},
                                            "v" + std::to_string(i)));
    kept += out.candidates.size();
  }
  EXPECT_NEAR(static_cast<double>(kept) / n, 0.8, 0.02);
}

TEST(SyntheticExpert, ConfidenceRanges) {
  tagging::SyntheticExpert expert(Modality::object, 0.0, 1.0, 3);
  for (int i = 0; i < 500; ++i) {
    const auto out = expert.run(record_with({2, 0, 0, 0, 0}, "v" + std::to_string(i)));
    ASSERT_EQ(out.candidates.size(), 2u);
    EXPECT_EQ(out.candidates[0].tag, datagen::factor_word({2, 0, 0, 0, 0}, Modality::object));
    EXPECT_GE(out.candidates[0].confidence, 0.6f);
    EXPECT_LE(out.candidates[0].confidence, 1.0f);
    EXPECT_GE(out.candidates[1].confidence, 0.3f);
    EXPECT_LE(out.candidates[1].confidence, 0.7f);
    const auto& d = datagen::distractor_words();
    EXPECT_NE(std::find(d.begin(), d.end(), out.candidates[1].tag), d.end());
  }
}

TEST(SyntheticExpert, PureFunctionOfRecordAndSeed) {
  tagging::SyntheticExpert a(Modality::scene, 0.3, 0.5, 77), b(Modality::scene, 0.3, 0.5, 77);
  const auto r = record_with({3, 2, 5, 1, 4}, "video00042");
  const auto x = a.run(r), y = a.run(r), z = b.run(r);
  ASSERT_EQ(x.candidates.size(), z.candidates.size());
  for (std::size_t i = 0; i < x.candidates.size(); ++i) {
    EXPECT_EQ(x.candidates[i].tag, y.candidates[i].tag);
    EXPECT_EQ(x.candidates[i].confidence, z.candidates[i].confidence);
  }
}

TEST(Modality, NamesRoundTrip) {
  for (auto m : tagging::kModalities) {
    EXPECT_EQ(tagging::parse_modality(tagging::modality_name(m)), m);
  }
}
