#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "table/encoders/transformer.hpp"
#include "table/numerics/gradcheck.hpp"
#include "table/numerics/ops.hpp"
#include "table/numerics/param_file.hpp"
#include "table/numerics/random.hpp"

namespace num = table::numerics;
using num::Tensor;
using TD = Tensor<double>;

namespace {

TD random_tensor(num::Rng& rng, num::Shape shape, double scale = 1.0, bool grad = false) {
  std::vector<double> v(num::shape_numel(shape));
  for (auto& x : v) x = rng.normal() * scale;
  return TD::from(std::move(shape), std::move(v), grad);
}

void expect_values(const TD& t, const std::vector<double>& expected, double tol) {
  ASSERT_EQ(t.numel(), expected.size());
  for (std::size_t i = 0; i < expected.size(); ++i) EXPECT_NEAR(t[i], expected[i], tol) << i;
}

}  // namespace

TEST(Tensor, ShapeAndDataAgree) {
  const auto t = TD::zeros({2, 3, 4});
  EXPECT_EQ(t.numel(), 24u);
  EXPECT_EQ(t.rank(), 3u);
  EXPECT_THROW(TD::from({2, 2}, {1, 2, 3}), num::DimensionError);
}

TEST(Tensor, NonFiniteForwardIsAnError) {
  const auto big = TD::from({1}, {1000.0});
  EXPECT_THROW(num::exp(big), num::NumericError);
}

TEST(Matmul, IdentityLeavesMatrixUnchanged) {
  const auto eye = TD::from({2, 2}, {1, 0, 0, 1});
  const auto a = TD::from({2, 3}, {1, 2, 3, 4, 5, 6});
  expect_values(num::matmul(eye, a), {1, 2, 3, 4, 5, 6}, 0);
}

TEST(Matmul, HandComputedProduct) {
  const auto a = TD::from({2, 2}, {1, 2, 3, 4});
  const auto b = TD::from({2, 1}, {1, 1});
  const auto c = num::matmul(a, b);
  EXPECT_EQ(c.shape(), (num::Shape{2, 1}));
  expect_values(c, {3, 7}, 0);
}

TEST(Matmul, ZerosAnnihilate) {
  num::Rng rng(3);
  const auto c = num::matmul(TD::zeros({2, 3}), random_tensor(rng, {3, 4}));
  EXPECT_EQ(c.shape(), (num::Shape{2, 4}));
  for (double v : c.data()) EXPECT_EQ(v, 0.0);
}

TEST(Matmul, InnerDimensionMismatchThrows) {
  EXPECT_THROW(num::matmul(TD::zeros({2, 3}), TD::zeros({2, 3})), num::DimensionError);
}

TEST(Softmax, UniformInputGivesUniformOutput) {
  expect_values(num::softmax(TD::zeros({3}), 0), {1.0 / 3, 1.0 / 3, 1.0 / 3}, 1e-12);
}

TEST(Softmax, ScalarExpOracle) {
  // exp(k) / (e + e^2 + e^3) for k = 1, 2, 3
  const double z = std::exp(1.0) + std::exp(2.0) + std::exp(3.0);
  const auto out = num::softmax(TD::from({3}, {1, 2, 3}), 0);
  expect_values(out, {std::exp(1.0) / z, std::exp(2.0) / z, std::exp(3.0) / z}, 1e-12);
  expect_values(out, {0.09003, 0.24473, 0.66524}, 1e-4);
}

TEST(Softmax, ShiftInvarianceProperty) {
  num::Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const auto x = random_tensor(rng, {3, 7}, 3.0);
    const double c = rng.uniform(-50.0, 50.0);
    std::vector<double> shifted(x.data().begin(), x.data().end());
    for (auto& v : shifted) v += c;
    for (std::size_t axis : {0u, 1u}) {
      const auto a = num::softmax(x, axis);
      const auto b = num::softmax(TD::from({3, 7}, shifted), axis);
      for (std::size_t i = 0; i < a.numel(); ++i) ASSERT_NEAR(a[i], b[i], 1e-6);
    }
  }
}

TEST(Softmax, RowsArePositiveAndSumToOne) {
  num::Rng rng(12);
  const auto out = num::softmax(random_tensor(rng, {5, 9}, 20.0), 1);
  for (std::size_t r = 0; r < 5; ++r) {
    double s = 0;
    for (std::size_t c = 0; c < 9; ++c) {
      EXPECT_GT(out.at(r, c), 0.0);
      s += out.at(r, c);
    }
    EXPECT_NEAR(s, 1.0, 1e-6);
  }
}

TEST(Softmax, LargeLogitsStayFinite) {
  const auto out = num::softmax(TD::from({3}, {1000, 1001, 1002}), 0);
  expect_values(out, {0.09003, 0.24473, 0.66524}, 1e-4);
}

TEST(LayerNorm, ConstantRowBecomesZero) {
  const auto out = num::layer_norm(TD::full({1, 4}, 3.5), TD::full({4}, 1), TD::zeros({4}));
  for (double v : out.data()) EXPECT_NEAR(v, 0.0, 1e-12);
}

TEST(LayerNorm, AlreadyStandardizedRowIsKept) {
  const auto out = num::layer_norm(TD::from({1, 2}, {1, -1}), TD::full({2}, 1), TD::zeros({2}));
  // variance 1 plus eps 1e-5 in the denominator
  expect_values(out, {1 / std::sqrt(1 + 1e-5), -1 / std::sqrt(1 + 1e-5)}, 1e-12);
  expect_values(out, {1, -1}, 1e-5);
}

TEST(LayerNorm, ZeroGainGivesBias) {
  num::Rng rng(4);
  const auto bias = TD::from({3}, {0.5, -1, 2});
  const auto out = num::layer_norm(random_tensor(rng, {4, 3}), TD::zeros({3}), bias);
  for (std::size_t r = 0; r < 4; ++r) {
    for (std::size_t c = 0; c < 3; ++c) EXPECT_DOUBLE_EQ(out.at(r, c), bias[c]);
  }
}

TEST(LayerNorm, RowsHaveZeroMeanUnitVariance) {
  num::Rng rng(5);
  const auto out = num::layer_norm(random_tensor(rng, {6, 16}, 4.0), TD::full({16}, 1),
                                   TD::zeros({16}));
  for (std::size_t r = 0; r < 6; ++r) {
    double mean = 0, var = 0;
    for (std::size_t c = 0; c < 16; ++c) mean += out.at(r, c) / 16;
    for (std::size_t c = 0; c < 16; ++c) var += (out.at(r, c) - mean) * (out.at(r, c) - mean) / 16;
    EXPECT_NEAR(mean, 0.0, 1e-5);
    EXPECT_NEAR(var, 1.0, 1e-5);
  }
}

TEST(Elementwise, GeluAtZero) { EXPECT_EQ(num::gelu(TD::zeros({1}))[0], 0.0); }

TEST(Elementwise, MeanOfConstantIsConstant) {
  const auto t = TD::full({3, 5}, 2.25);
  expect_values(num::mean(t, 0), std::vector<double>(5, 2.25), 1e-15);
  expect_values(num::mean(t, 1), std::vector<double>(3, 2.25), 1e-15);
}

TEST(Elementwise, ConcatShapeAlgebra) {
  const auto c = num::concat(std::vector<TD>{TD::zeros({2, 3}), TD::zeros({2, 5})}, 1);
  EXPECT_EQ(c.shape(), (num::Shape{2, 8}));
  EXPECT_THROW(num::concat(std::vector<TD>{TD::zeros({2, 3}), TD::zeros({3, 5})}, 1),
               num::DimensionError);
}

TEST(Elementwise, SliceTransposeAndShapeErrors) {
  const auto a = TD::from({2, 3}, {1, 2, 3, 4, 5, 6});
  expect_values(num::slice(a, 1, 1, 3), {2, 3, 5, 6}, 0);
  expect_values(num::transpose(a), {1, 4, 2, 5, 3, 6}, 0);
  EXPECT_THROW(num::add(a, TD::zeros({3, 2})), num::DimensionError);
  EXPECT_THROW(num::mul(a, TD::zeros({2})), num::DimensionError);
  EXPECT_THROW(num::sub(a, TD::zeros({1, 3})), num::DimensionError);
}

TEST(Backward, SumGivesOnes) {
  auto x = TD::from({2, 2}, {1, -2, 3, 0.5}, true);
  num::Tape<double> tape;
  {
    num::TapeScope<double> scope(tape);
    num::backward(num::sum(x));
  }
  for (double g : x.grad()) EXPECT_EQ(g, 1.0);
  EXPECT_EQ(tape.size(), 0u);
}

TEST(Backward, SquareGivesTwiceInput) {
  auto x = TD::from({3}, {1, -2, 3}, true);
  num::Tape<double> tape;
  num::TapeScope<double> scope(tape);
  num::backward(num::sum(num::mul(x, x)));
  expect_values(TD::from({3}, std::vector<double>(x.grad().begin(), x.grad().end())), {2, -4, 6},
                0);
}

TEST(Backward, NonScalarLossIsContractError) {
  auto x = TD::from({2}, {1, 2}, true);
  num::Tape<double> tape;
  num::TapeScope<double> scope(tape);
  const auto y = num::scale(x, 2.0);
  EXPECT_THROW(num::backward(y), num::ContractError);
}

TEST(Backward, LossOffTapeIsContractError) {
  auto x = TD::from({2}, {1, 2}, true);
  const auto off = num::sum(x);  // no tape active
  num::Tape<double> tape;
  num::TapeScope<double> scope(tape);
  EXPECT_THROW(num::backward(off), num::ContractError);
}

TEST(Backward, TapeIsTopologicallyOrdered) {
  auto x = TD::from({2}, {1, 2}, true);
  num::Tape<double> tape;
  num::TapeScope<double> scope(tape);
  const auto a = num::scale(x, 2.0);
  const auto b = num::mul(a, x);
  const auto c = num::sum(b);
  EXPECT_EQ(tape.size(), 3u);
  EXPECT_TRUE(tape.contains(a.node().get()));
  EXPECT_TRUE(tape.contains(c.node().get()));
}

TEST(Backward, NoGradScopeRecordsNothing) {
  auto x = TD::from({2}, {1, 2}, true);
  num::Tape<double> tape;
  num::TapeScope<double> scope(tape);
  {
    num::NoGradScope<double> off;
    (void)num::sum(num::mul(x, x));
  }
  EXPECT_EQ(tape.size(), 0u);
}

TEST(Gradcheck, QuadraticMatchesToMachinePrecision) {
  num::Rng rng(1);
  auto theta = random_tensor(rng, {5}, 1.0, true);
  const auto report = num::gradcheck([&] { return num::sum(num::mul(theta, theta)); }, {theta},
                                     {.samples_per_tensor = 0});
  EXPECT_TRUE(report.passed) << report.describe();
  EXPECT_LT(report.worst.relative_error, 1e-8);
}

TEST(Gradcheck, AttentionBlock) {
  num::Rng rng(2);
  auto block = table::encoders::BlockParams<double>::init(rng, 8, 16, 1);
  const auto x = random_tensor(rng, {5, 8});
  const auto target = random_tensor(rng, {5, 8});
  std::vector<TD> params;
  block.visit("b", [&](const std::string&, TD& t) { params.push_back(t); });
  const auto report = num::gradcheck(
      [&] {
        const auto y = table::encoders::transformer_block(x, block, 2);
        return num::mean_all(num::mul(y, target));
      },
      params);
  EXPECT_TRUE(report.passed) << report.describe();
}

TEST(Gradcheck, SoftmaxCrossEntropyComposite) {
  num::Rng rng(3);
  auto w = random_tensor(rng, {6, 4}, 0.5, true);
  const auto x = random_tensor(rng, {3, 6});
  const std::vector<std::size_t> picks{1, 4 + 3, 8 + 0};
  const auto report = num::gradcheck(
      [&] {
        const auto logp = num::log_softmax(num::matmul(x, w), 1);
        return num::scale(num::mean_all(num::pick(logp, picks)), -1.0);
      },
      {w}, {.samples_per_tensor = 0});
  EXPECT_TRUE(report.passed) << report.describe();
}

TEST(Gradcheck, EveryOpHasAConsistentBackward) {
  num::Rng rng(4);
  auto a = random_tensor(rng, {3, 4}, 1.0, true);
  auto b = random_tensor(rng, {3, 4}, 1.0, true);
  auto gain = random_tensor(rng, {4}, 1.0, true);
  auto bias = random_tensor(rng, {4}, 1.0, true);
  auto s = TD::from({1}, {0.7}, true);
  auto table_ = random_tensor(rng, {5, 4}, 1.0, true);
  const std::vector<int> ids{4, 0, 4};
  const auto weights = random_tensor(rng, {3, 4});
  const auto report = num::gradcheck(
      [&] {
        auto y = num::add(num::mul(a, b), num::sub(a, num::scale(b, 0.3)));
        y = num::layer_norm(num::gelu(y), gain, bias);
        y = num::add(y, num::embedding(table_, std::span<const int>(ids)));
        y = num::add_bias(num::mul_scalar(y, num::exp(s)), bias);
        y = num::add(num::l2_normalize(y), num::softmax(y, 0));
        auto z = num::concat(std::vector<TD>{num::slice(y, 1, 0, 2), num::slice(y, 1, 2, 4)}, 1);
        z = num::add(z, num::transpose(num::reshape(num::transpose(z), {4, 3})));
        const auto r = num::stack(std::vector<TD>{num::row(z, 2), num::mean(z, 0), num::row(z, 0)});
        return num::add(num::sum(num::mul(r, weights)), num::mean_all(num::log_softmax(z, 1)));
      },
      {a, b, gain, bias, s, table_}, {.samples_per_tensor = 0});
  EXPECT_TRUE(report.passed) << report.describe();
}

TEST(Gradcheck, ReportsTheWorstOffender) {
  // A deliberately wrong backward: reports gradient 0 for x^2.
  auto x = TD::from({1}, {1.5}, true);
  const auto broken = [&] {
    const double v = x[0];
    return num::detail::make_result<double>("broken", {1}, {v * v}, {x.node()},
                                            [](num::Node<double>&) {});
  };
  const auto report = num::gradcheck(broken, {x}, {.samples_per_tensor = 0});
  EXPECT_FALSE(report.passed);
  EXPECT_EQ(report.worst.tensor_index, 0u);
  EXPECT_EQ(report.worst.coordinate, 0u);
  EXPECT_EQ(report.worst.analytic, 0.0);
  EXPECT_NEAR(report.worst.numeric, 3.0, 1e-6);
}

TEST(Determinism, SameSeedSameForwardBits) {
  const auto run = [] {
    num::Rng rng(99);
    auto block = table::encoders::BlockParams<float>::init(rng, 16, 32, 2);
    std::vector<float> v(6 * 16);
    for (auto& x : v) x = static_cast<float>(rng.normal());
    const auto y = table::encoders::transformer_block(Tensor<float>::from({6, 16}, v), block, 4);
    return std::vector<float>(y.data().begin(), y.data().end());
  };
  EXPECT_EQ(run(), run());
}

TEST(Rng, PortableSequences) {
  num::Rng a(5), b(5);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.uniform(), b.uniform());
  EXPECT_NE(num::derive_seed(1, 2), num::derive_seed(2, 1));
  EXPECT_EQ(num::fnv1a("video00001"), num::fnv1a("video00001"));
}

TEST(ParamFile, RoundTripAndFormat) {
  const auto path = std::filesystem::temp_directory_path() / "table_param_roundtrip.tbl";
  num::ParamFile file;
  file.meta["note"] = "x";
  file.tensors.push_back({"a.w", {2, 3}, {1, 2, 3, 4, 5, -6.5f}});
  file.tensors.push_back({"b", {1}, {0.25f}});
  num::write_param_file(path, file);

  std::ifstream raw(path, std::ios::binary);
  char magic[8];
  raw.read(magic, 8);
  EXPECT_EQ(std::string(magic, 8), "TBLPARAM");

  const auto back = num::read_param_file(path);
  EXPECT_EQ(back.meta, file.meta);
  ASSERT_EQ(back.tensors.size(), 2u);
  EXPECT_EQ(back.find("a.w").shape, (num::Shape{2, 3}));
  EXPECT_EQ(back.find("a.w").values, file.tensors[0].values);
  EXPECT_EQ(back.find("b").values, file.tensors[1].values);
  EXPECT_THROW(back.find("missing"), num::ParamFileError);
  std::filesystem::remove(path);
}

TEST(ParamFile, CorruptFileIsRejected) {
  const auto path = std::filesystem::temp_directory_path() / "table_param_corrupt.tbl";
  std::ofstream(path, std::ios::binary) << "NOTAPARAMFILE";
  EXPECT_THROW(num::read_param_file(path), num::ParamFileError);
  std::filesystem::remove(path);
}
