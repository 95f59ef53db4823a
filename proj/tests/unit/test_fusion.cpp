#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <set>

#include "table/datagen/corpus.hpp"
#include "table/fusion/model.hpp"
#include "table/numerics/gradcheck.hpp"
#include "table/numerics/ops.hpp"

using namespace table;
namespace num = table::numerics;
using encoders::EncoderConfig;
using fusion::CrossEncoderParams;
using fusion::ProjectionParams;
using num::Tensor;
using TD = Tensor<double>;

namespace {

EncoderConfig small_config() {
  EncoderConfig c;
  c.dim = 8;
  c.heads = 2;
  c.mlp_ratio = 2;
  c.text_layers = 1;
  c.visual_layers = 1;
  c.cross_layers = 2;
  c.max_frames = 3;
  c.max_tag_len = 10;
  c.max_caption_len = 10;
  c.raw_frame_dim = 5;
  c.shared_dim = 6;
  c.vocab_size = datagen::Vocabulary::standard().size();
  return c;
}

template <typename T = double>
Tensor<T> random(num::Rng& rng, num::Shape shape, double scale = 1.0) {
  std::vector<T> v(num::shape_numel(shape));
  for (auto& x : v) x = static_cast<T>(rng.normal() * scale);
  return Tensor<T>::from(std::move(shape), std::move(v));
}

template <typename T>
std::vector<T> values(const Tensor<T>& t) {
  return {t.data().begin(), t.data().end()};
}

void make_identity_blocks(CrossEncoderParams<double>& p) {
  for (auto& b : p.blocks) {
    for (auto* t : {&b.wo, &b.bo, &b.w2, &b.b2}) {
      for (auto& x : t->mutable_data()) x = 0.0;
    }
  }
}

TD identity(std::size_t n) {
  std::vector<double> v(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) v[i * n + i] = 1.0;
  return TD::from({n, n}, v);
}

}  // namespace

TEST(TgEncode, OutputShape) {
  const auto c = small_config();
  num::Rng rng(1);
  const auto p = CrossEncoderParams<double>::init(rng, c);
  const auto out = fusion::tg_encode(random(rng, {3, 8}), random(rng, {8}), p, c);
  EXPECT_EQ(out.shape(), (num::Shape{4, 8}));
}

TEST(TgEncode, IdentityBlocksAddOnlyEmbeddings) {
  const auto c = small_config();
  num::Rng rng(2);
  auto p = CrossEncoderParams<double>::init(rng, c);
  make_identity_blocks(p);
  const auto frames = random(rng, {3, 8});
  const auto tag = random(rng, {8});
  const auto out = fusion::tg_encode(frames, tag, p, c);
  for (std::size_t r = 0; r < 4; ++r) {
    const std::size_t position = r;  // the tag occupies slot N = 3
    const std::size_t segment = r < 3 ? 0 : 1;
    for (std::size_t j = 0; j < 8; ++j) {
      const double input = r < 3 ? frames.at(r, j) : tag[j];
      EXPECT_NEAR(out.at(r, j), input + p.position.at(position, j) + p.segment.at(segment, j),
                  1e-12);
    }
  }
}

TEST(TgEncode, GradcheckThroughPooling) {
  const auto c = small_config();
  num::Rng rng(3);
  auto p = CrossEncoderParams<double>::init(rng, c);
  for (auto& x : p.lambda.mutable_data()) x = 0.7;
  auto frames = random(rng, {3, 8});
  auto tag = random(rng, {8});
  frames.set_requires_grad(true);
  tag.set_requires_grad(true);
  const auto weights = random(rng, {8});
  std::vector<TD> params{frames, tag, p.position, p.segment, p.lambda};
  for (auto& b : p.blocks) b.visit("b", [&](const std::string&, TD& t) { params.push_back(t); });
  const auto report = num::gradcheck(
      [&] {
        const auto fused = fusion::tg_encode(frames, tag, p, c);
        return num::sum(num::mul(fusion::pool_and_residual(fused, frames, p.lambda).combined,
                                 weights));
      },
      params);
  EXPECT_TRUE(report.passed) << report.describe();
}

TEST(PoolAndResidual, ZeroLambdaGivesVisualMean) {
  num::Rng rng(4);
  const auto fused = random(rng, {4, 8});
  const auto frames = random(rng, {3, 8});
  const auto pooled = fusion::pool_and_residual(fused, frames, TD::from({1}, {0.0}));
  const auto mean = num::mean(frames, 0);
  for (std::size_t j = 0; j < 8; ++j) EXPECT_DOUBLE_EQ(pooled.combined[j], mean[j]);
}

TEST(PoolAndResidual, ConstantRowsAddUp) {
  std::vector<double> u{1, 2, 3, 4}, w{-1, 0.5, 2, 0};
  std::vector<double> fused, frames;
  for (int i = 0; i < 4; ++i) fused.insert(fused.end(), u.begin(), u.end());
  for (int i = 0; i < 3; ++i) frames.insert(frames.end(), w.begin(), w.end());
  const auto pooled = fusion::pool_and_residual(TD::from({4, 4}, fused), TD::from({3, 4}, frames),
                                                TD::from({1}, {1.0}));
  for (std::size_t j = 0; j < 4; ++j) EXPECT_DOUBLE_EQ(pooled.combined[j], u[j] + w[j]);
}

TEST(PoolAndResidual, ResidualIdentityIsExact) {
  num::Rng rng(5);
  const auto fused = random(rng, {4, 8});
  const auto frames = random(rng, {3, 8});
  const auto lambda = TD::from({1}, {0.37});
  const auto pooled = fusion::pool_and_residual(fused, frames, lambda);
  const auto mean = num::mean(frames, 0);
  for (std::size_t j = 0; j < 8; ++j) {
    EXPECT_EQ(pooled.combined[j] - (0.37 * pooled.fused_mean[j] + mean[j]), 0.0);
  }
}

TEST(PoolAndResidual, LambdaDerivativeIsFusedMean) {
  num::Rng rng(6);
  const auto fused = random(rng, {4, 8});
  const auto frames = random(rng, {3, 8});
  const double h = 1e-6, lambda = 0.3;
  const auto up = fusion::pool_and_residual(fused, frames, TD::from({1}, {lambda + h}));
  const auto down = fusion::pool_and_residual(fused, frames, TD::from({1}, {lambda - h}));
  for (std::size_t j = 0; j < 8; ++j) {
    EXPECT_NEAR((up.combined[j] - down.combined[j]) / (2 * h), up.fused_mean[j], 1e-8);
  }
}

TEST(PoolAndResidual, ShapeMismatchThrows) {
  EXPECT_THROW(fusion::pool_and_residual(TD::zeros({4, 8}), TD::zeros({3, 6}),
                                         TD::from({1}, {0.0})),
               num::DimensionError);
}

TEST(Similarity, IdenticalAndOrthogonal) {
  ProjectionParams<double> proj{identity(4), identity(4)};
  const auto a = TD::from({4}, {1, 2, 0, 0});
  EXPECT_NEAR(fusion::similarity(a, TD::from({4}, {2, 4, 0, 0}), proj).item(), 1.0, 1e-12);
  EXPECT_NEAR(fusion::similarity(a, TD::from({4}, {0, 0, 3, -1}), proj).item(), 0.0, 1e-12);
}

TEST(Similarity, BatchedMatchesPairwiseLoop) {
  const auto c = small_config();
  num::Rng rng(7);
  const auto proj = ProjectionParams<double>::init(rng, c);
  const auto videos = random(rng, {5, 8});
  const auto texts = random(rng, {4, 8});
  const auto s = fusion::similarity_matrix(videos, texts, proj);
  ASSERT_EQ(s.shape(), (num::Shape{5, 4}));
  for (std::size_t i = 0; i < 5; ++i) {
    for (std::size_t j = 0; j < 4; ++j) {
      const double single = fusion::similarity(num::row(videos, i), num::row(texts, j), proj).item();
      EXPECT_NEAR(s.at(i, j), single, 1e-6);
      EXPECT_LE(std::abs(single), 1.0 + 1e-12);
    }
  }
}

TEST(Similarity, ZeroProjectionIsNormalizationError) {
  ProjectionParams<double> proj{TD::zeros({4, 4}), identity(4)};
  EXPECT_THROW(fusion::similarity(TD::from({4}, {1, 0, 0, 0}), TD::from({4}, {1, 0, 0, 0}), proj),
               num::NumericError);
}

TEST(Similarity, Gradcheck) {
  const auto c = small_config();
  num::Rng rng(8);
  auto proj = ProjectionParams<double>::init(rng, c);
  auto videos = random(rng, {3, 8});
  auto texts = random(rng, {3, 8});
  const auto weights = random(rng, {3, 3});
  const auto report = num::gradcheck(
      [&] { return num::sum(num::mul(fusion::similarity_matrix(videos, texts, proj), weights)); },
      {proj.video, proj.text, videos, texts});
  EXPECT_TRUE(report.passed) << report.describe();
}

TEST(JointEncode, OutputShapes) {
  const auto c = small_config();
  num::Rng rng(9);
  const auto p = CrossEncoderParams<double>::init(rng, c);
  const auto out =
      fusion::joint_encode(random(rng, {3, 8}), random(rng, {8}), random(rng, {10, 8}), 6, p, c);
  EXPECT_EQ(out.joint.shape(), (num::Shape{8}));
  EXPECT_EQ(out.text_positions.shape(), (num::Shape{10, 8}));
  for (std::size_t r = 6; r < 10; ++r) {
    for (std::size_t j = 0; j < 8; ++j) EXPECT_EQ(out.text_positions.at(r, j), 0.0);
  }
}

TEST(JointEncode, PaddingRowsDoNotMatter) {
  const auto c = small_config();
  num::Rng rng(10);
  const auto p = CrossEncoderParams<double>::init(rng, c);
  const auto frames = random(rng, {3, 8});
  const auto tag = random(rng, {8});
  auto text = random(rng, {10, 8});
  const auto a = fusion::joint_encode(frames, tag, text, 6, p, c);
  // swap padding rows 7 and 9
  auto d = text.mutable_data();
  for (std::size_t j = 0; j < 8; ++j) std::swap(d[7 * 8 + j], d[9 * 8 + j]);
  const auto b = fusion::joint_encode(frames, tag, text, 6, p, c);
  EXPECT_EQ(values(a.joint), values(b.joint));
  EXPECT_EQ(values(a.text_positions), values(b.text_positions));
}

TEST(JointEncode, SharesBlocksWithTagGuidingEncoder) {
  const auto c = small_config();
  num::Rng rng(11);
  auto p = CrossEncoderParams<double>::init(rng, c);
  const auto frames = random(rng, {3, 8});
  const auto tag = random(rng, {8});
  const auto text = random(rng, {10, 8});
  const auto joint0 = values(fusion::joint_encode(frames, tag, text, 5, p, c).joint);
  const auto tg0 = values(fusion::tg_encode(frames, tag, p, c));
  p.blocks[0].wv.mutable_data()[5] += 0.25;
  EXPECT_NE(values(fusion::joint_encode(frames, tag, text, 5, p, c).joint), joint0);
  EXPECT_NE(values(fusion::tg_encode(frames, tag, p, c)), tg0);
}

TEST(JointEncode, InvalidTextLengthThrows) {
  const auto c = small_config();
  num::Rng rng(12);
  const auto p = CrossEncoderParams<double>::init(rng, c);
  EXPECT_THROW(
      fusion::joint_encode(random(rng, {3, 8}), random(rng, {8}), random(rng, {10, 8}), 0, p, c),
      num::DimensionError);
}

TEST(Heads, ZeroWeightsGiveUniformPredictions) {
  const auto c = small_config();
  num::Rng rng(13);
  auto p = CrossEncoderParams<double>::init(rng, c);
  for (auto* t : {&p.vtm_weight, &p.vtm_bias, &p.mlm_weight, &p.mlm_bias}) {
    for (auto& x : t->mutable_data()) x = 0.0;
  }
  const auto vtm = num::softmax(fusion::vtm_head(random(rng, {8}), p), 0);
  EXPECT_EQ(vtm.shape(), (num::Shape{2}));
  EXPECT_DOUBLE_EQ(vtm[0], 0.5);
  const auto mlm = num::softmax(fusion::mlm_head(random(rng, {4, 8}), p), 1);
  EXPECT_EQ(mlm.shape(), (num::Shape{4, c.vocab_size}));
  for (double x : mlm.data()) EXPECT_NEAR(x, 1.0 / c.vocab_size, 1e-15);
}

TEST(Heads, SoftmaxOfLogitsSumsToOne) {
  const auto c = small_config();
  num::Rng rng(14);
  const auto p = CrossEncoderParams<double>::init(rng, c);
  const auto mlm = num::softmax(fusion::mlm_head(random(rng, {3, 8}, 5.0), p), 1);
  for (std::size_t r = 0; r < 3; ++r) {
    double s = 0;
    for (std::size_t v = 0; v < c.vocab_size; ++v) s += mlm.at(r, v);
    EXPECT_NEAR(s, 1.0, 1e-6);
  }
  const auto vtm = num::softmax(fusion::vtm_head(random(rng, {8}, 5.0), p), 0);
  EXPECT_NEAR(vtm[0] + vtm[1], 1.0, 1e-6);
}

TEST(ModelParams, LambdaStartsAtZeroAndGroupsPartition) {
  auto params = fusion::ModelParams<float>::init(small_config(), 3);
  EXPECT_EQ(params.cross.lambda[0], 0.0f);
  std::set<const void*> nodes;
  std::set<std::string> names;
  std::size_t encoders = 0, cross = 0;
  params.visit([&](const std::string& name, Tensor<float>& t, fusion::ParamGroup g) {
    EXPECT_TRUE(nodes.insert(t.node().get()).second) << name;
    EXPECT_TRUE(names.insert(name).second) << name;
    EXPECT_TRUE(t.requires_grad()) << name;
    (g == fusion::ParamGroup::encoders ? encoders : cross) += 1;
  });
  EXPECT_GT(encoders, 0u);
  EXPECT_GT(cross, 0u);
  EXPECT_EQ(params.parameters().size(), encoders + cross);
}

TEST(ModelParams, AllTokensModeFeedsEveryTagToken) {
  auto c = small_config();
  c.tag_tokens_mode = encoders::TagTokensMode::all_tokens;
  const auto params = fusion::ModelParams<float>::init(c, 4);
  const auto vocab = datagen::Vocabulary::standard();
  auto record = datagen::generate_corpus(1, 2, 0.5f, {.num_frames = 3, .raw_frame_dim = 5})[0];
  const auto prepared = fusion::prepare_record(record, vocab, c);
  const auto out = fusion::encode_video<float>(prepared.frames, prepared.tag_tokens, params);
  const auto length = datagen::content_length(prepared.tag_tokens);
  EXPECT_EQ(out.tag_rows.dim(0), length);
  EXPECT_EQ(out.fused.dim(0), 3 + length);
}

TEST(Checkpoint, RoundTripPreservesEveryTensor) {
  const auto path = std::filesystem::temp_directory_path() / "table_ckpt_roundtrip.tbl";
  auto params = fusion::ModelParams<float>::init(small_config(), 5);
  params.cross.lambda.mutable_data()[0] = 0.125f;
  const auto vocab = datagen::Vocabulary::standard();
  fusion::save_checkpoint(path, params, vocab, {{"epoch", 2}});
  auto loaded = fusion::load_checkpoint(path);
  EXPECT_EQ(loaded.vocab, vocab);
  EXPECT_EQ(loaded.meta.at("epoch"), 2);
  EXPECT_EQ(loaded.params.config.dim, 8u);
  auto a = params.parameters();
  auto b = loaded.params.parameters();
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(values(a[i]), values(b[i]));
  std::filesystem::remove(path);
}

TEST(Checkpoint, MissingFileThrows) {
  EXPECT_ANY_THROW(fusion::load_checkpoint("/nonexistent/table.tbl"));
}

TEST(PrepareRecord, WrongFrameCountThrows) {
  auto record = datagen::generate_corpus(1, 2, 0.5f)[0];
  EXPECT_THROW(fusion::prepare_record(record, datagen::Vocabulary::standard(), small_config()),
               num::DimensionError);
}
