#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <numeric>
#include <vector>

#include "samast/autodiff/grad_check.hpp"
#include "samast/model/ast.hpp"
#include "samast/model/checkpoint.hpp"
#include "support/random.hpp"

namespace samast::model {
namespace {

using testing::random_tensor;

ModelConfig toy(std::size_t bin_blocks = 2, std::size_t frame_blocks = 2) {
  ModelConfig c;
  c.embed_dim = 8;
  c.depth = 1;
  c.heads = 2;
  c.bins = 16 * bin_blocks;
  c.frames = 16 * frame_blocks;
  return c;
}

dsp::Spectrogram random_spec(const ModelConfig& c, std::uint64_t seed, double lo = -12.0,
                             double hi = 2.0) {
  dsp::Spectrogram s;
  s.bins = c.bins;
  s.frames = c.frames;
  s.hop_seconds = 0.01;
  s.values = random_tensor({c.bins * c.frames}, seed, lo, hi).data();
  return s;
}

// Parameters with O(1) entries so every gradient is well away from zero.
ParamSet spread_params(const ModelConfig& c, std::uint64_t seed) {
  ParamSet p = init_params(c, seed);
  for (std::size_t i = 0; i < p.size(); ++i) {
    const Tensor noise = random_tensor(p[i].shape(), seed * 1000 + i, -0.5, 0.5);
    for (std::size_t j = 0; j < p[i].size(); ++j) p[i][j] += noise[j];
  }
  return p;
}

TEST(ModelConfig, Validation) {
  ModelConfig c;
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(c.num_patches(), 400u);
  EXPECT_EQ(c.tokens(), 401u);
  c.frames = 810;
  EXPECT_THROW(c.validate(), ConfigError);
  c = ModelConfig{};
  c.embed_dim = 90;
  c.heads = 4;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(ModelConfig, RecordRoundTrip) {
  ModelConfig c = toy();
  c.dropout = 0.25;
  c.input_mean = -3.125;
  const auto parsed = kv::parse_text(kv::to_text(to_record(c)));
  EXPECT_EQ(apply_record(ModelConfig{}, parsed), c);
}

TEST(Patchify, DefaultShape) {
  const ModelConfig c;
  const Tensor p = patchify(random_spec(c, 1), c);
  EXPECT_EQ(p.shape(), (Shape{400, 256}));
}

TEST(Patchify, ConstantInputGivesConstantPatches) {
  const ModelConfig c = toy(2, 3);
  dsp::Spectrogram s = random_spec(c, 1);
  std::fill(s.values.begin(), s.values.end(), -2.5);
  const Tensor p = patchify(s, c);
  for (double v : p.data()) EXPECT_EQ(v, -2.5);
}

TEST(Patchify, OrderingAndBijection) {
  const ModelConfig c = toy(2, 3);
  const dsp::Spectrogram s = random_spec(c, 2);
  const Tensor p = patchify(s, c);
  // Patch 1 is bin block 0, frame block 1; patch 3 is bin block 1, frame block 0.
  EXPECT_EQ(p.at(1, 0), s.at(0, 16));
  EXPECT_EQ(p.at(1, 17), s.at(1, 17));
  EXPECT_EQ(p.at(3, 0), s.at(16, 0));
  EXPECT_EQ(p.at(5, 255), s.at(31, 47));
  EXPECT_EQ(unpatchify(p, c).values, s.values);
}

TEST(Patchify, ShapeErrors) {
  ModelConfig c = toy();
  dsp::Spectrogram s = random_spec(c, 3);
  s.frames = 48;
  s.values.resize(s.bins * s.frames);
  EXPECT_THROW(patchify(s, c), ConfigError);
  c.frames = 40;
  EXPECT_THROW(patchify(random_spec(c, 4), c), ConfigError);
}

TEST(InitParams, DeterministicAndShaped) {
  const ModelConfig c;
  const ParamSet a = init_params(c, 7), b = init_params(c, 7), d = init_params(c, 8);
  EXPECT_EQ(a, b);
  EXPECT_FALSE(a == d);
  EXPECT_NO_THROW(require_params(c, a));
  EXPECT_EQ(a.at("pos_embed").shape(), (Shape{401, 96}));
  EXPECT_EQ(a.at("blocks.3.attn.qkv.weight").shape(), (Shape{96, 288}));
  EXPECT_EQ(a.at("head.weight").shape(), (Shape{96, 4}));
  for (double v : a.at("cls_token").data()) EXPECT_EQ(v, 0.0);
  for (double v : a.at("blocks.0.mlp.fc1.bias").data()) EXPECT_EQ(v, 0.0);
  for (double v : a.at("norm.gain").data()) EXPECT_EQ(v, 1.0);
  for (double v : a.at("patch_embed.weight").data()) EXPECT_LE(std::abs(v), 0.04);
}

TEST(Forward, DefaultConfigLogits) {
  const ModelConfig c;
  const ParamSet p = init_params(c, 1);
  const dsp::Spectrogram s = random_spec(c, 5);
  const auto a = forward(c, p, s), b = forward(c, p, s);
  ASSERT_EQ(a.size(), 4u);
  for (double v : a) EXPECT_TRUE(std::isfinite(v));
  EXPECT_EQ(a, b);
}

TEST(Forward, ZeroHeadGivesZeroLogits) {
  const ModelConfig c = toy();
  ParamSet p = spread_params(c, 2);
  for (double& v : p.at("head.weight").values()) v = 0.0;
  for (double& v : p.at("head.bias").values()) v = 0.0;
  for (std::uint64_t seed : {1, 2, 3}) {
    EXPECT_EQ(forward(c, p, random_spec(c, seed)), std::vector<double>(4, 0.0));
    EXPECT_EQ(forward(c, p, random_spec(c, seed), {true, seed}), std::vector<double>(4, 0.0));
  }
}

TEST(Forward, DropoutOnlyInTrainMode) {
  const ModelConfig c = toy();
  const ParamSet p = spread_params(c, 3);
  const dsp::Spectrogram s = random_spec(c, 6);
  EXPECT_EQ(forward(c, p, s, {true, 11}), forward(c, p, s, {true, 11}));
  EXPECT_NE(forward(c, p, s, {true, 11}), forward(c, p, s, {true, 12}));
  EXPECT_NE(forward(c, p, s, {true, 11}), forward(c, p, s));
  ModelConfig no_drop = c;
  no_drop.dropout = 0.0;
  EXPECT_EQ(forward(no_drop, p, s, {true, 11}), forward(no_drop, p, s));
}

TEST(Forward, RejectsMismatchedInput) {
  const ModelConfig c = toy();
  const ParamSet p = init_params(c, 1);
  EXPECT_THROW(forward(c, p, random_spec(toy(2, 3), 1)), ConfigError);
  EXPECT_THROW(require_params(toy(2, 3), p), ConfigError);
}

TEST(Embedding, LengthAndHeadInvariance) {
  const ModelConfig c = toy();
  ParamSet p = spread_params(c, 4);
  const dsp::Spectrogram s = random_spec(c, 7);
  const auto e = extract_embedding(c, p, s);
  ASSERT_EQ(e.size(), c.embed_dim);
  EXPECT_EQ(e, extract_embedding(c, p, s));
  for (double& v : p.at("head.weight").values()) v *= -3.0;
  for (double& v : p.at("head.bias").values()) v += 1.0;
  EXPECT_EQ(e, extract_embedding(c, p, s));
}

TEST(Attention, DefaultShapesAndRowSums) {
  const ModelConfig c;
  const auto maps = export_attention(c, init_params(c, 2), random_spec(c, 8));
  ASSERT_EQ(maps.size(), c.depth);
  for (const auto& layer : maps) {
    ASSERT_EQ(layer.size(), c.heads);
    for (const Tensor& a : layer) {
      ASSERT_EQ(a.shape(), (Shape{401, 401}));
      for (std::size_t r = 0; r < 401; ++r) {
        double sum = 0.0;
        for (std::size_t k = 0; k < 401; ++k) {
          const double w = a.at(r, k);
          ASSERT_GE(w, 0.0);
          ASSERT_LE(w, 1.0);
          sum += w;
        }
        ASSERT_NEAR(sum, 1.0, 1e-10);
      }
    }
  }
}

TEST(Attention, SwappingPatchesPermutesMapsWithoutPositions) {
  const ModelConfig c = toy(1, 2);  // two patches
  ParamSet p = spread_params(c, 5);
  for (double& v : p.at("pos_embed").values()) v = 0.0;
  const dsp::Spectrogram s = random_spec(c, 9);
  dsp::Spectrogram swapped = s;
  for (std::size_t b = 0; b < c.bins; ++b)
    for (std::size_t f = 0; f < 16; ++f)
      std::swap(swapped.values[b * c.frames + f], swapped.values[b * c.frames + 16 + f]);
  const auto a = export_attention(c, p, s), b = export_attention(c, p, swapped);
  const std::size_t perm[3] = {0, 2, 1};  // CLS stays first
  for (std::size_t h = 0; h < c.heads; ++h) {
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 3; ++j)
        EXPECT_NEAR(b[0][h].at(perm[i], perm[j]), a[0][h].at(i, j), 1e-12);
  }
  // With positions the maps differ.
  const ParamSet q = spread_params(c, 5);
  const auto a2 = export_attention(c, q, s), b2 = export_attention(c, q, swapped);
  EXPECT_GT(std::abs(b2[0][0].at(2, 2) - a2[0][0].at(1, 1)), 1e-6);
}

TEST(Encoder, PermutationEquivariantWithoutClsOrPositions) {
  ModelConfig c = toy();
  c.depth = 2;
  const ParamSet p = spread_params(c, 6);
  const Tensor tokens = random_tensor({5, c.embed_dim}, 10);
  const std::size_t perm[5] = {3, 0, 4, 1, 2};
  Tensor permuted(tokens.shape());
  for (std::size_t r = 0; r < 5; ++r)
    for (std::size_t k = 0; k < c.embed_dim; ++k)
      permuted[r * c.embed_dim + k] = tokens.at(perm[r], k);

  ad::Graph g;
  const Bound b = bind(g, p, false);
  const Tensor out = encode_sequence(c, b, g.constant(tokens), nullptr, nullptr).value();
  const Tensor out_p = encode_sequence(c, b, g.constant(permuted), nullptr, nullptr).value();
  for (std::size_t r = 0; r < 5; ++r)
    for (std::size_t k = 0; k < c.embed_dim; ++k)
      EXPECT_NEAR(out_p.at(r, k), out.at(perm[r], k), 1e-12);
}

ad::LossGraphBuilder toy_loss(const ModelConfig& c, const ParamSet& layout,
                              const std::vector<dsp::Spectrogram>& specs,
                              const std::vector<int>& labels) {
  return [&c, &layout, &specs, &labels](ad::Graph&, const std::vector<ad::Var>& vars) {
    const Bound b{&layout, vars};
    std::vector<ad::Var> rows;
    for (std::size_t i = 0; i < specs.size(); ++i)
      rows.push_back(run(c, b, specs[i], {true, mix_seed(21, i)}).logits);
    return ad::cross_entropy(ad::concat_rows(rows), labels);
  };
}

TEST(GradCheck, FullForwardWithCrossEntropy) {
  const ModelConfig c = toy();
  const ParamSet p = spread_params(c, 7);
  const std::vector<dsp::Spectrogram> specs{random_spec(c, 11), random_spec(c, 12)};
  const std::vector<int> labels{2, 0};
  std::vector<Tensor> values;
  for (std::size_t i = 0; i < p.size(); ++i) values.push_back(p[i]);
  const auto report = ad::grad_check(toy_loss(c, p, specs, labels), values, 1e-5, 1e-4);
  EXPECT_TRUE(report.passed) << report.max_relative_error << " at param " << report.worst_param
                             << "[" << report.worst_index << "]";
  EXPECT_LT(report.max_relative_error, 1e-4);
}

TEST(GradCheck, TrainingGradientMatchesGraphGradient) {
  const ModelConfig c = toy();
  const ParamSet p = spread_params(c, 8);
  const std::vector<dsp::Spectrogram> specs{random_spec(c, 13), random_spec(c, 14)};
  const std::vector<int> labels{1, 3};
  std::vector<Tensor> values;
  for (std::size_t i = 0; i < p.size(); ++i) values.push_back(p[i]);
  const auto expected = ad::analytic_gradients(toy_loss(c, p, specs, labels), values);
  const std::vector<const dsp::Spectrogram*> batch{&specs[0], &specs[1]};
  const auto got = loss_and_grad(c, p, batch, labels, {true, 21});
  EXPECT_EQ(got.loss, ad::evaluate_loss(toy_loss(c, p, specs, labels), values));
  for (std::size_t i = 0; i < p.size(); ++i) EXPECT_EQ(got.grads[i], expected[i]) << p.name(i);
}

TEST(BinStats, ValidationAndRecordRoundTrip) {
  ModelConfig c = toy();
  c.bin_mean.assign(c.bins, -3.25);
  c.bin_std.assign(c.bins, 1.5);
  c.bin_mean[5] = 0.1;
  EXPECT_NO_THROW(c.validate());
  const ModelConfig back = apply_record(toy(), kv::parse_text(kv::to_text(to_record(c))));
  EXPECT_EQ(back, c);
  EXPECT_TRUE(same_architecture(c, toy()));
  ModelConfig other = toy();
  other.depth = 2;
  EXPECT_FALSE(same_architecture(c, other));

  ModelConfig bad = c;
  bad.bin_std.pop_back();
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = c;
  bad.bin_std[3] = 0.0;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = c;
  bad.bin_mean.resize(c.bins + 1);
  bad.bin_std.resize(c.bins + 1, 1.0);
  EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(BinStats, UniformStatsReproduceScalarNormalisation) {
  ModelConfig scalar = toy();
  scalar.input_mean = -2.5;
  scalar.input_std = 3.0;
  ModelConfig per_bin = scalar;
  per_bin.bin_mean.assign(scalar.bins, -2.5);
  per_bin.bin_std.assign(scalar.bins, 3.0);
  const ParamSet p = spread_params(scalar, 4);
  const auto s = random_spec(scalar, 5);
  EXPECT_EQ(forward(scalar, p, s), forward(per_bin, p, s));
}

TEST(BinStats, EachBinUsesItsOwnStatistics) {
  // Shifting bin b of the input by d and its mean by d leaves the output unchanged.
  ModelConfig c = toy();
  c.bin_mean.assign(c.bins, -1.0);
  c.bin_std.assign(c.bins, 2.0);
  for (std::size_t b = 0; b < c.bins; ++b) c.bin_std[b] = 1.0 + 0.1 * static_cast<double>(b);
  const ParamSet p = spread_params(c, 6);
  auto s = random_spec(c, 7);
  const auto before = forward(c, p, s);
  const std::size_t bin = 21;
  for (std::size_t f = 0; f < c.frames; ++f) s.at(bin, f) += 4.0;
  const auto changed = forward(c, p, s);
  c.bin_mean[bin] += 4.0;
  const auto after = forward(c, p, s);
  EXPECT_NE(changed, before);
  for (std::size_t k = 0; k < before.size(); ++k) EXPECT_NEAR(after[k], before[k], 1e-12);
}

class CheckpointTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = std::filesystem::temp_directory_path() /
           ("samast_ckpt_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
            "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    std::filesystem::create_directories(dir_);
  }
  void TearDown() override { std::filesystem::remove_all(dir_); }

  ModelCheckpoint sample(bool with_optimizer) const {
    ModelCheckpoint ck;
    ck.config = toy();
    ck.params = spread_params(ck.config, 9);
    ck.seed = 42;
    ck.epoch = 3;
    ck.extra = {{"optim.rho", "0.05"}};
    if (with_optimizer) {
      optim::OptimizerState st = optim::OptimizerState::for_params(ck.params);
      st.step = 17;
      st.first_moment[0][0] = 0.125;
      st.second_moment[1][0] = 1e-300;
      ck.optimizer = st;
    }
    return ck;
  }

  std::filesystem::path dir_;
};

TEST_F(CheckpointTest, RoundTripIsBitIdentical) {
  for (bool opt : {false, true}) {
    const ModelCheckpoint ck = sample(opt);
    const auto a = dir_ / "a.astc", b = dir_ / "b.astc";
    save_checkpoint(a, ck);
    const ModelCheckpoint loaded = load_checkpoint(a);
    EXPECT_EQ(loaded, ck);
    save_checkpoint(b, loaded);
    EXPECT_EQ(io::read_file(a), io::read_file(b));
  }
}

TEST_F(CheckpointTest, KeepsMeasuredInputStatistics) {
  ModelCheckpoint ck = sample(true);
  ck.config.bin_mean = random_tensor({ck.config.bins}, 3, -9.0, 1.0).data();
  ck.config.bin_std = random_tensor({ck.config.bins}, 4, 0.5, 2.0).data();
  const auto path = dir_ / "stats.astc";
  save_checkpoint(path, ck);
  EXPECT_EQ(load_checkpoint(path), ck);
  EXPECT_EQ(load_checkpoint(path, toy()).config.bin_std, ck.config.bin_std);
}

TEST_F(CheckpointTest, VersionMismatch) {
  io::Bytes bytes = encode_checkpoint(sample(false));
  bytes[4] = 9;
  EXPECT_THROW(decode_checkpoint(bytes), VersionMismatchError);
}

TEST_F(CheckpointTest, TruncatedFile) {
  const io::Bytes bytes = encode_checkpoint(sample(true));
  for (std::size_t keep : {std::size_t{2}, std::size_t{6}, std::size_t{40}, bytes.size() / 2,
                           bytes.size() - 1}) {
    const io::Bytes cut(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(keep));
    EXPECT_THROW(decode_checkpoint(cut), TruncatedFileError) << keep;
  }
}

TEST_F(CheckpointTest, TamperedShapeNamesParameter) {
  io::Bytes bytes = encode_checkpoint(sample(false));
  const std::string name = "patch_embed.bias";
  auto it = std::search(bytes.begin(), bytes.end(), name.begin(), name.end());
  ASSERT_NE(it, bytes.end());
  const std::size_t dims_at = static_cast<std::size_t>(it - bytes.begin()) + name.size() + 4;
  std::uint64_t dim = 0;
  std::memcpy(&dim, &bytes[dims_at], 8);
  ASSERT_EQ(dim, 8u);
  dim = 7;
  std::memcpy(&bytes[dims_at], &dim, 8);
  try {
    decode_checkpoint(bytes);
    FAIL() << "expected a shape mismatch";
  } catch (const ShapeMismatchError& e) {
    EXPECT_EQ(e.parameter(), name);
    EXPECT_NE(std::string(e.what()).find(name), std::string::npos);
  }
}

TEST_F(CheckpointTest, DifferentConfigIsConfigError) {
  const auto path = dir_ / "c.astc";
  save_checkpoint(path, sample(false));
  EXPECT_NO_THROW(load_checkpoint(path, toy()));
  ModelConfig other = toy();
  other.dropout = 0.2;
  EXPECT_THROW(load_checkpoint(path, other), ConfigError);
}

TEST_F(CheckpointTest, BadMagic) {
  io::Bytes bytes = encode_checkpoint(sample(false));
  bytes[0] = 'X';
  EXPECT_THROW(decode_checkpoint(bytes), LoadError);
}

}  // namespace
}  // namespace samast::model
