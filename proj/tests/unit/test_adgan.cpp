#include <gtest/gtest.h>
#include <torch/torch.h>

#include "attnad/adgan/adgan.hpp"
#include "attnad/adgan/trainer.hpp"
#include "attnad/attention/trainer.hpp"
#include "attnad/common/errors.hpp"
#include "attnad/common/tensor_util.hpp"

using namespace attnad;
using namespace attnad::adgan;

namespace {

AdganConfig small_adgan() {
  AdganConfig c;
  c.feature_channels = 8;
  c.encoder.base_width = 8;
  c.encoder.blocks = {1, 1, 1};
  c.latent_dim = 16;
  c.decoder_width = 8;
  c.disc_base_width = 8;
  return c;
}

attention::AttentionNetConfig small_attention() {
  attention::AttentionNetConfig c;
  c.image_size = 32;
  c.latent_dim = 16;
  c.encoder.base_width = 8;
  c.encoder.blocks = {1, 1, 1};
  c.decoder_width = 8;
  c.disc_base_width = 8;
  return c;
}

// Exactly representable masks: binary, or multiples of 1/256 used with
// float64 products of float32-valued features (no rounding anywhere).
torch::Tensor quantized_mask(std::vector<int64_t> shape, std::uint64_t seed) {
  return (torch::randint(0, 257, shape, make_generator(seed)) / 256.0).to(torch::kFloat64);
}

}  // namespace

TEST(FeatureExtractor, PreservesSpatialDims) {
  FeatureExtractor ex(3, 16);
  auto f = extract_features(ex, torch::rand({2, 3, 64, 64}));
  EXPECT_EQ(f.sizes(), (std::vector<int64_t>{2, 16, 64, 64}));
}

TEST(FeatureExtractor, DeterministicInEval) {
  FeatureExtractor ex(3, 8);
  ex->eval();
  auto x = torch::rand({2, 3, 16, 16});
  EXPECT_TRUE(torch::equal(extract_features(ex, x), extract_features(ex, x)));
}

TEST(FeatureExtractor, ZeroInputZeroBiasGivesZero) {
  FeatureExtractor ex(3, 8);
  {
    torch::NoGradGuard g;
    ex->conv1()->bias.zero_();
    ex->conv2()->bias.zero_();
  }
  auto f = extract_features(ex, torch::zeros({1, 3, 16, 16}));
  EXPECT_EQ(f.abs().max().item<float>(), 0.0f);
}

TEST(MaskFeatures, IdentityAndAnnihilation) {
  auto f = torch::randn({2, 5, 8, 8});
  EXPECT_TRUE(torch::equal(mask_features(f, torch::ones({2, 1, 8, 8})), f));
  EXPECT_TRUE(torch::equal(mask_features(f, torch::zeros({2, 1, 8, 8})), torch::zeros_like(f)));
}

TEST(MaskFeatures, MatchesScalarLoopExactly) {
  auto f = torch::randn({2, 3, 4, 5});
  auto a = torch::rand({2, 1, 4, 5});
  auto out = mask_features(f, a).contiguous();
  auto fa = f.accessor<float, 4>(), aa = a.accessor<float, 4>(), oa = out.accessor<float, 4>();
  for (int n = 0; n < 2; ++n)
    for (int k = 0; k < 3; ++k)
      for (int h = 0; h < 4; ++h)
        for (int w = 0; w < 5; ++w) ASSERT_EQ(oa[n][k][h][w], fa[n][k][h][w] * aa[n][0][h][w]);
}

TEST(MaskFeatures, CompositionAndLinearity) {
  for (std::uint64_t t = 0; t < 50; ++t) {
    auto f = torch::randn({2, 4, 8, 8}, make_generator(t)).to(torch::kFloat64);
    auto a1 = quantized_mask({2, 1, 8, 8}, 1000 + t), a2 = quantized_mask({2, 1, 8, 8}, 2000 + t);
    EXPECT_TRUE(torch::equal(mask_features(f, a1 * a2), mask_features(mask_features(f, a1), a2)));
    auto g = torch::randn({2, 4, 8, 8}, make_generator(500 + t)).to(torch::kFloat64);
    EXPECT_TRUE(torch::allclose(mask_features(f + g, a1), mask_features(f, a1) + mask_features(g, a1), 0, 1e-12));
    EXPECT_TRUE(torch::allclose(mask_features(f, a1 + a2), mask_features(f, a1) + mask_features(f, a2), 0, 1e-12));
  }
}

TEST(MaskFeatures, MisalignmentRejected) {
  EXPECT_THROW(mask_features(torch::rand({2, 4, 8, 8}), torch::rand({2, 1, 4, 4})), ShapeError);
  EXPECT_THROW(mask_features(torch::rand({2, 4, 8, 8}), torch::rand({2, 2, 8, 8})), ShapeError);
}

TEST(Score, AntiMonotoneInAttention) {
  // D(F) = mean(F) on nonnegative features; shrinking A must not lower the score.
  auto disc = [](const torch::Tensor& f) { return f.mean({1, 2, 3}); };
  for (std::uint64_t t = 0; t < 20; ++t) {
    auto f = torch::rand({3, 4, 8, 8}, make_generator(t));
    auto a = torch::rand({3, 1, 8, 8}, make_generator(100 + t));
    auto shrink = torch::rand({3, 1, 8, 8}, make_generator(200 + t));
    auto s_full = score_from_features(mask_features(f, a), disc);
    auto s_small = score_from_features(mask_features(f, a * shrink), disc);
    EXPECT_TRUE(torch::all(s_small >= s_full).item<bool>());
  }
}

TEST(AdganModel, ScoreInUnitIntervalAndDeterministic) {
  auto acfg = small_attention();
  attention::AttentionGenerator gen(acfg);
  Adgan model(3, 32, small_adgan());
  auto x = torch::rand({5, 3, 32, 32});
  auto s1 = anomaly_score(x, gen, model, 2), s2 = anomaly_score(x, gen, model, 5);
  EXPECT_EQ(s1.sizes(), (std::vector<int64_t>{5}));
  EXPECT_TRUE(torch::all((s1 >= 0) & (s1 <= 1)).item<bool>());
  EXPECT_TRUE(torch::allclose(s1, s2, 0, 1e-6));
  EXPECT_TRUE(torch::equal(anomaly_score(x, gen, model, 2), s1));
  EXPECT_TRUE(gen->is_training());
}

TEST(AdganTrainer, FrozenSnapshotUntouchedAndNoGradients) {
  synth::AugmentationConfig aug;
  attention::AttentionTrainer stage1(small_attention(), aug, 1);
  auto x = torch::rand({4, 3, 32, 32}, make_generator(3));
  const auto before = module_hash(*stage1.generator());

  auto cfg = small_adgan();
  cfg.lambda_anomaly_fake = 1.0;
  AdganTrainer t(cfg, stage1.generator(), 3, 32, aug, 9);
  for (int s = 0; s < 3; ++s) {
    auto b = t.step(x, s);
    EXPECT_TRUE(b.all_finite());
    EXPECT_GT(b.d_anomaly, 0.0);
  }
  EXPECT_EQ(module_hash(*stage1.generator()), before);
  for (const auto& p : stage1.generator()->parameters()) {
    EXPECT_FALSE(p.requires_grad());
    EXPECT_TRUE(!p.grad().defined() || p.grad().abs().max().item<float>() == 0.0f);
  }
}

TEST(AdganTrainer, DeterministicUnderFixedSeed) {
  synth::AugmentationConfig aug;
  auto x = torch::rand({4, 3, 32, 32}, make_generator(4));
  std::uint64_t hashes[2];
  double totals[2];
  for (int r = 0; r < 2; ++r) {
    attention::AttentionTrainer stage1(small_attention(), aug, 1);
    AdganTrainer t(small_adgan(), stage1.generator(), 3, 32, aug, 5);
    AdganLossBundle b;
    for (int s = 0; s < 2; ++s) b = t.step(x, s);
    hashes[r] = module_hash(*t.model());
    totals[r] = b.g_total;
  }
  EXPECT_EQ(hashes[0], hashes[1]);
  EXPECT_EQ(totals[0], totals[1]);
}

TEST(AdganConfig, Validation) {
  auto c = small_adgan();
  EXPECT_NO_THROW(c.validate(32));
  EXPECT_THROW(c.validate(36), ConfigError);
  c.lambda_adv = 0.0;
  c.lambda_rec = 0.0;
  EXPECT_THROW(c.validate(32), ConfigError);
}
