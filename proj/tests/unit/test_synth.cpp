#include <gtest/gtest.h>
#include <torch/torch.h>

#include <algorithm>

#include "attnad/common/errors.hpp"
#include "attnad/common/rng.hpp"
#include "attnad/data/shapes.hpp"
#include "attnad/synth/anomaly_synth.hpp"

using namespace attnad;
using namespace attnad::synth;

namespace {

torch::Tensor random_image(std::uint64_t seed, int c = 3, int h = 16, int w = 16) {
  return torch::rand({c, h, w}, torch::Generator(at::make_generator<at::CPUGeneratorImpl>(seed)));
}

bool bit_equal(const torch::Tensor& a, const torch::Tensor& b) {
  return a.sizes() == b.sizes() && a.dtype() == b.dtype() && torch::equal(a, b);
}

}  // namespace

TEST(Rotate, TwoByTwoHalfTurn) {
  auto img = torch::tensor({1.0f, 2.0f, 3.0f, 4.0f}).view({1, 2, 2});  // [[a,b],[c,d]]
  auto out = rotate(img, 180);
  EXPECT_TRUE(bit_equal(out, torch::tensor({4.0f, 3.0f, 2.0f, 1.0f}).view({1, 2, 2})));
}

TEST(Rotate, FourQuarterTurnsAreIdentity) {
  auto img = random_image(3);
  auto out = img;
  for (int i = 0; i < 4; ++i) out = rotate(out, 90);
  EXPECT_TRUE(bit_equal(out, img));
}

TEST(Rotate, MatchesCoordinateRemap) {
  auto img = torch::arange(16, torch::kFloat32).view({1, 4, 4});
  auto out = rotate(img, 90).contiguous();
  auto in_a = img.accessor<float, 3>();
  auto out_a = out.accessor<float, 3>();
  // Counter-clockwise quarter turn: out[i][j] = in[j][W - 1 - i].
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) EXPECT_EQ(out_a[0][i][j], in_a[0][j][3 - i]) << i << "," << j;
  }
  auto out270 = rotate(img, 270).contiguous();
  auto o3 = out270.accessor<float, 3>();
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) EXPECT_EQ(o3[0][i][j], in_a[0][3 - j][i]);
  }
}

TEST(Rotate, RejectsNonSquareQuarterTurnAndBadAngle) {
  auto img = torch::rand({3, 8, 16});
  EXPECT_THROW(rotate(img, 90), ShapeError);
  EXPECT_THROW(rotate(img, 270), ShapeError);
  EXPECT_NO_THROW(rotate(img, 180));
  EXPECT_THROW(rotate(torch::rand({3, 8, 8}), 45), ShapeError);
}

TEST(Perm, NeverIdentityOnNonConstantImage) {
  auto img = random_image(11);
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    EXPECT_FALSE(torch::equal(perm(img, 2, seed), img)) << seed;
  }
}

TEST(Perm, PreservesPerChannelHistogram) {
  auto img = random_image(12, 3, 32, 32);
  for (int g : {2, 4}) {
    auto out = perm(img, g, 99);
    for (int c = 0; c < 3; ++c) {
      auto a = std::get<0>(img[c].flatten().sort());
      auto b = std::get<0>(out[c].flatten().sort());
      EXPECT_TRUE(torch::equal(a, b));
    }
  }
}

TEST(Perm, QuadrantsFollowRecordedPermutation) {
  // Quadrant q (row-major) is filled with value q.
  auto img = torch::zeros({1, 4, 4});
  for (int q = 0; q < 4; ++q) img.slice(1, (q / 2) * 2, (q / 2) * 2 + 2).slice(2, (q % 2) * 2, (q % 2) * 2 + 2).fill_(q);
  const std::uint64_t seed = 1234;
  auto out = perm(img, 2, seed);

  // Recompute the permutation independently: Fisher-Yates with the same
  // engine, redrawing the identity.
  Rng rng(seed);
  std::vector<int> order;
  do {
    order = {0, 1, 2, 3};
    for (int i = 3; i > 0; --i) std::swap(order[i], order[rng.below(static_cast<std::uint64_t>(i) + 1)]);
  } while (order == std::vector<int>{0, 1, 2, 3});

  for (int q = 0; q < 4; ++q) {
    auto tile = out.slice(1, (q / 2) * 2, (q / 2) * 2 + 2).slice(2, (q % 2) * 2, (q % 2) * 2 + 2);
    EXPECT_TRUE(torch::all(tile == static_cast<float>(order[q])).item<bool>()) << "tile " << q;
  }
  EXPECT_EQ(draw_perm(2, seed).order, order);
}

TEST(Perm, RejectsIndivisibleImage) {
  EXPECT_THROW(perm(torch::rand({3, 10, 10}), 3, 0), ShapeError);
}

TEST(Jitter, ZeroRangesAreIdentity) {
  auto img = random_image(5);
  JitterRanges zero{{0, 0}, {0, 0}, {0, 0}};
  EXPECT_TRUE(bit_equal(color_jitter(img, 42, zero), img));
}

TEST(Jitter, BrightnessIsAdditive) {
  auto img = torch::full({3, 8, 8}, 0.5f);
  auto out = apply_jitter(img, JitterStep{0.2, 0.0, 0.0});
  EXPECT_TRUE(torch::allclose(out, torch::full({3, 8, 8}, 0.7f), 0.0, 1e-6));
}

TEST(Jitter, DeterministicAndInRange) {
  auto img = random_image(6);
  JitterRanges r;
  auto a = color_jitter(img, 77, r), b = color_jitter(img, 77, r);
  EXPECT_TRUE(bit_equal(a, b));
  EXPECT_GE(a.min().item<float>(), 0.0f);
  EXPECT_LE(a.max().item<float>(), 1.0f);
}

TEST(Jitter, GrayscaleSkipsSaturation) {
  auto img = random_image(7, 1);
  EXPECT_TRUE(bit_equal(apply_jitter(img, JitterStep{0.0, 0.0, 0.7}), img));
}

TEST(Prime, ThreeStepsInOrderAndZeroMask) {
  AugmentationConfig cfg;
  cfg.seed = 9;
  auto img = random_image(8);
  auto s = make_prime_anomaly(img, cfg);
  ASSERT_EQ(s.recipe.steps.size(), 3u);
  EXPECT_EQ(step_name(s.recipe.steps[0]), "rotate");
  EXPECT_EQ(step_name(s.recipe.steps[1]), "perm");
  EXPECT_EQ(step_name(s.recipe.steps[2]), "jitter");
  EXPECT_EQ(s.mask.sum().item<float>(), 0.0f);
  EXPECT_TRUE(bit_equal(make_prime_anomaly(img, cfg).image, s.image));
}

TEST(Prime, SingleAugmentationConditions) {
  AugmentationConfig cfg;
  cfg.use_perm = cfg.use_jitter = false;
  auto s = make_prime_anomaly(random_image(1), cfg);
  ASSERT_EQ(s.recipe.steps.size(), 1u);
  EXPECT_EQ(step_name(s.recipe.steps[0]), "rotate");
}

TEST(Cut, ZeroFillAreaAndLocality) {
  AugmentationConfig cfg;
  cfg.cut_fill_zero_prob = 1.0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    cfg.seed = seed;
    auto img = random_image(100 + seed) * 0.9 + 0.05;  // no exact zeros
    auto prime = make_prime_anomaly(img, cfg);
    auto s = make_cut_anomaly(img, prime, cfg);
    const auto& cut = std::get<CutStep>(s.recipe.steps.back());
    ASSERT_TRUE(cut.fill_zero);
    auto inside = s.image.slice(1, cut.top, cut.top + cut.height).slice(2, cut.left, cut.left + cut.width);
    EXPECT_TRUE(torch::all(inside == 0).item<bool>());
    EXPECT_EQ((s.mask == 0).sum().item<std::int64_t>(), cut.area());
    auto outside = s.mask.expand_as(img) > 0.5;
    EXPECT_TRUE(torch::equal(s.image.masked_select(outside), img.masked_select(outside)));
  }
}

TEST(Cut, PrimeFillCopiesPrimeRegion) {
  AugmentationConfig cfg;
  cfg.cut_fill_zero_prob = 0.0;
  cfg.seed = 4;
  auto img = random_image(4);
  auto prime = make_prime_anomaly(img, cfg);
  auto s = make_cut_anomaly(img, prime, cfg);
  auto inside = s.mask.expand_as(img) < 0.5;
  EXPECT_TRUE(torch::equal(s.image.masked_select(inside), prime.image.masked_select(inside)));
}

TEST(Cut, AreaFractionWithinBounds) {
  AugmentationConfig cfg;
  for (std::uint64_t seed = 0; seed < 500; ++seed) {
    auto cut = draw_cut(64, 64, cfg, seed);
    EXPECT_GE(cut.top, 0);
    EXPECT_GE(cut.left, 0);
    EXPECT_LE(cut.top + cut.height, 64);
    EXPECT_LE(cut.left + cut.width, 64);
    EXPECT_GT(cut.area(), 0);
    EXPECT_LT(cut.area(), 64 * 64);
  }
}

TEST(Batch, KindFractionBinaryMasksAndDeterminism) {
  AugmentationConfig cfg;
  cfg.seed = 2024;
  auto batch = torch::rand({1000, 3, 16, 16}, torch::Generator(at::make_generator<at::CPUGeneratorImpl>(1)));
  auto a = sample_anomaly_batch(batch, cfg);
  const double frac = static_cast<double>(a.count_kind(AnomalyKind::cut)) / 1000.0;
  EXPECT_GE(frac, 0.45);
  EXPECT_LE(frac, 0.55);
  EXPECT_TRUE(torch::all((a.masks == 0) | (a.masks == 1)).item<bool>());
  auto b = sample_anomaly_batch(batch, cfg);
  EXPECT_TRUE(bit_equal(a.images, b.images));
  EXPECT_TRUE(bit_equal(a.masks, b.masks));
  EXPECT_EQ(a.recipes, b.recipes);
}

TEST(Batch, RecipesReplayBitExactly) {
  AugmentationConfig cfg;
  cfg.seed = 5;
  auto batch = torch::rand({64, 3, 16, 16});
  auto a = sample_anomaly_batch(batch, cfg);
  for (int i = 0; i < 64; ++i) {
    nlohmann::json j = a.recipes[i];
    auto recipe = j.get<Recipe>();
    ASSERT_EQ(recipe, a.recipes[i]);
    auto s = replay(batch[i], recipe);
    EXPECT_TRUE(bit_equal(s.image, a.images[i]));
    EXPECT_TRUE(bit_equal(s.mask, a.masks[i]));
  }
}

TEST(Batch, MaskZeroExactlyWhereContentChanged) {
  AugmentationConfig cfg;
  cfg.seed = 8;
  auto batch = torch::rand({32, 3, 16, 16}) * 0.9 + 0.05;
  auto a = sample_anomaly_batch(batch, cfg);
  for (int i = 0; i < 32; ++i) {
    if (a.recipes[i].kind != AnomalyKind::cut) continue;
    auto changed = (a.images[i] != batch[i]).any(0, true);
    // Inside the rectangle the content is replaced; outside it is untouched.
    EXPECT_FALSE((changed & (a.masks[i] > 0.5)).any().item<bool>());
  }
}

TEST(Synth, DistributionShiftProxy) {
  data::SyntheticShapesConfig sc;
  sc.n_train = 256;
  auto x = data::generate_shapes_dataset(sc).train.images;
  AugmentationConfig cfg;
  cfg.seed = 3;
  double prime_diff = 0.0, view_diff = 0.0;
  Rng rng(77);
  auto view = [&](const torch::Tensor& img) {
    auto v = rng.bernoulli(0.5) ? img.flip({2}) : img;
    const auto crop = static_cast<int64_t>(rng.between(56, 64));
    const auto top = static_cast<int64_t>(rng.between(0, 64 - crop));
    const auto left = static_cast<int64_t>(rng.between(0, 64 - crop));
    v = v.slice(1, top, top + crop).slice(2, left, left + crop).unsqueeze(0);
    return torch::nn::functional::interpolate(
               v, torch::nn::functional::InterpolateFuncOptions().size(std::vector<int64_t>{64, 64}).mode(torch::kBilinear).align_corners(false))
        .squeeze(0);
  };
  for (int i = 0; i < 256; ++i) {
    auto c = cfg;
    c.seed = derive_seed(cfg.seed, i);
    prime_diff += (make_prime_anomaly(x[i], c).image - x[i]).abs().mean().item<double>();
    view_diff += (view(x[i]) - view(x[i])).abs().mean().item<double>();
  }
  EXPECT_GT(prime_diff, view_diff);
}

TEST(AugmentationConfig, Validation) {
  AugmentationConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.rotation_angles = {45};
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.cut_area_frac = {0.0, 0.5};
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.cut_fill_zero_prob = 1.5;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.perm_grid = 1;
  EXPECT_THROW(cfg.validate(), ConfigError);
}
