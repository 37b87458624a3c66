#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <vector>

#include "attnad/synth/recipe.hpp"

// Hard-augmentation anomaly synthesis. Given a normal image x, two kinds of
// synthetic anomalies are produced together with ground-truth attention masks
// (1 = normal region, 0 = anomalous region):
//
//   prime  x'  = jitter(perm(rotate(x)))           mask all zeros
//   cut    x'' = x with one rectangle replaced by  mask zero inside the
//                zeros or by the same region of x'   rectangle, one outside
//
// Every function is a pure function of its inputs and seed.

namespace attnad::synth {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool operator==(const Interval&) const = default;
};

struct JitterRanges {
  Interval brightness{-0.3, 0.3};
  Interval contrast{-0.5, 0.5};
  Interval saturation{-0.8, 0.8};
  bool operator==(const JitterRanges&) const = default;
};

struct AugmentationConfig {
  std::vector<int> rotation_angles{90, 180, 270};
  int perm_grid = 2;
  JitterRanges jitter;
  Interval cut_area_frac{0.05, 0.4};
  Interval cut_aspect{0.5, 2.0};
  double cut_fill_zero_prob = 0.5;
  // Which hard augmentations make up the prime anomaly.
  bool use_rotate = true;
  bool use_perm = true;
  bool use_jitter = true;
  std::uint64_t seed = 0;

  bool operator==(const AugmentationConfig&) const = default;

  /// Throws ConfigError on out-of-range values.
  void validate() const;
  bool any_prime_step() const { return use_rotate || use_perm || use_jitter; }
};

struct AnomalySample {
  torch::Tensor image;  // [C, H, W]
  torch::Tensor mask;   // [1, H, W], binary
  Recipe recipe;
};

struct AnomalyBatch {
  torch::Tensor images;  // [N, C, H, W]
  torch::Tensor masks;   // [N, 1, H, W]
  std::vector<Recipe> recipes;

  std::int64_t count_kind(AnomalyKind kind) const;
};

/// Lossless right-angle rotation, counter-clockwise. Accepts [C, H, W] or
/// [N, C, H, W]. Quarter turns require square images.
torch::Tensor rotate(const torch::Tensor& img, int angle);

PermStep draw_perm(int grid, std::uint64_t seed);
torch::Tensor apply_perm(const torch::Tensor& img, const PermStep& step);
/// grid x grid tile shuffle with a seeded, never-identity permutation.
torch::Tensor perm(const torch::Tensor& img, int grid, std::uint64_t seed);

JitterStep draw_jitter(const JitterRanges& ranges, std::uint64_t seed);
torch::Tensor apply_jitter(const torch::Tensor& img, const JitterStep& step);
torch::Tensor color_jitter(const torch::Tensor& img, std::uint64_t seed, const JitterRanges& ranges);

CutStep draw_cut(std::int64_t height, std::int64_t width, const AugmentationConfig& cfg, std::uint64_t seed);
/// Ground-truth mask for a cut: [1, H, W], zero inside the rectangle.
torch::Tensor cut_mask(std::int64_t height, std::int64_t width, const CutStep& cut);

AnomalySample make_prime_anomaly(const torch::Tensor& img, const AugmentationConfig& cfg);
AnomalySample make_cut_anomaly(const torch::Tensor& img, const AnomalySample& prime, const AugmentationConfig& cfg);

/// Rebuild a sample from its source image and recipe, without randomness.
AnomalySample replay(const torch::Tensor& img, const Recipe& recipe);

/// One anomaly per input image; prime or cut with equal probability.
AnomalyBatch sample_anomaly_batch(const torch::Tensor& batch, const AugmentationConfig& cfg);

}  // namespace attnad::synth
