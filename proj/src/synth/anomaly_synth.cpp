#include "attnad/synth/anomaly_synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "attnad/common/errors.hpp"
#include "attnad/common/rng.hpp"
#include "attnad/common/tensor_util.hpp"

namespace attnad::synth {

namespace {

// Sub-seed streams for a single sample.
constexpr std::uint64_t kRotateStream = 1;
constexpr std::uint64_t kPermStream = 2;
constexpr std::uint64_t kJitterStream = 3;
constexpr std::uint64_t kCutStream = 4;
constexpr std::uint64_t kKindStream = 5;
constexpr std::uint64_t kPrimeStream = 6;

void check_interval(const Interval& iv, const char* what) {
  if (!(iv.lo <= iv.hi) || !std::isfinite(iv.lo) || !std::isfinite(iv.hi)) {
    throw ConfigError(std::string(what) + ": interval lo must not exceed hi");
  }
}

torch::Tensor luminance(const torch::Tensor& img) {
  if (img.size(0) == 1) return img;
  return img[0] * 0.299f + img[1] * 0.587f + img[2] * 0.114f;
}

template <class Step>
const Step* find_step(const Recipe& r) {
  for (const auto& s : r.steps) {
    if (const auto* p = std::get_if<Step>(&s)) return p;
  }
  return nullptr;
}

}  // namespace

void AugmentationConfig::validate() const {
  for (int a : rotation_angles) {
    if (a != 90 && a != 180 && a != 270) {
      throw ConfigError("rotation_angles must be a subset of {90, 180, 270}, got " + std::to_string(a));
    }
  }
  if (use_rotate && rotation_angles.empty()) throw ConfigError("rotation enabled with no angles");
  if (perm_grid < 2) throw ConfigError("perm_grid must be >= 2");
  check_interval(jitter.brightness, "jitter.brightness");
  check_interval(jitter.contrast, "jitter.contrast");
  check_interval(jitter.saturation, "jitter.saturation");
  if (jitter.contrast.lo < -1.0 || jitter.saturation.lo < -1.0) {
    throw ConfigError("contrast/saturation deltas must be >= -1");
  }
  check_interval(cut_area_frac, "cut_area_frac");
  if (!(cut_area_frac.lo > 0.0 && cut_area_frac.hi < 1.0)) {
    throw ConfigError("cut_area_frac must satisfy 0 < lo <= hi < 1");
  }
  check_interval(cut_aspect, "cut_aspect");
  if (!(cut_aspect.lo > 0.0)) throw ConfigError("cut_aspect must be positive");
  if (!(cut_fill_zero_prob >= 0.0 && cut_fill_zero_prob <= 1.0)) {
    throw ConfigError("cut_fill_zero_prob must lie in [0, 1]");
  }
}

std::int64_t AnomalyBatch::count_kind(AnomalyKind kind) const {
  return std::count_if(recipes.begin(), recipes.end(), [&](const Recipe& r) { return r.kind == kind; });
}

torch::Tensor rotate(const torch::Tensor& img, int angle) {
  if (img.dim() != 3 && img.dim() != 4) throw ShapeError("rotate: expected [C, H, W] or [N, C, H, W]");
  if (angle != 90 && angle != 180 && angle != 270) {
    throw ShapeError("rotate: angle must be 90, 180 or 270, got " + std::to_string(angle));
  }
  if (angle != 180 && img.size(-1) != img.size(-2)) {
    throw ShapeError("rotate: quarter turns need a square image");
  }
  return torch::rot90(img, angle / 90, {-2, -1}).contiguous();
}

PermStep draw_perm(int grid, std::uint64_t seed) {
  if (grid < 2) throw ShapeError("perm: grid must be >= 2");
  Rng rng(seed);
  const int n = grid * grid;
  std::vector<int> order(n);
  std::vector<int> identity(n);
  std::iota(identity.begin(), identity.end(), 0);
  do {
    order = identity;
    for (int i = n - 1; i > 0; --i) {
      const auto j = static_cast<int>(rng.below(static_cast<std::uint64_t>(i) + 1));
      std::swap(order[i], order[j]);
    }
  } while (order == identity);
  return PermStep{grid, std::move(order)};
}

torch::Tensor apply_perm(const torch::Tensor& img, const PermStep& step) {
  check_image(img, "perm");
  const int64_t g = step.grid;
  const int64_t c = img.size(0), h = img.size(1), w = img.size(2);
  if (g < 2 || h % g != 0 || w % g != 0) {
    throw ShapeError("perm: image " + std::to_string(h) + "x" + std::to_string(w) +
                     " not divisible into a " + std::to_string(g) + "x" + std::to_string(g) + " grid");
  }
  if (static_cast<int64_t>(step.order.size()) != g * g) throw ShapeError("perm: order size != grid^2");
  const int64_t th = h / g, tw = w / g;
  auto tiles = img.contiguous().view({c, g, th, g, tw}).permute({1, 3, 0, 2, 4}).reshape({g * g, c, th, tw});
  auto index = torch::tensor(std::vector<int64_t>(step.order.begin(), step.order.end()), torch::kLong);
  auto shuffled = tiles.index_select(0, index);
  return shuffled.view({g, g, c, th, tw}).permute({2, 0, 3, 1, 4}).reshape({c, h, w}).contiguous();
}

torch::Tensor perm(const torch::Tensor& img, int grid, std::uint64_t seed) {
  return apply_perm(img, draw_perm(grid, seed));
}

JitterStep draw_jitter(const JitterRanges& ranges, std::uint64_t seed) {
  Rng rng(seed);
  JitterStep s;
  s.brightness = rng.uniform(ranges.brightness.lo, ranges.brightness.hi);
  s.contrast = rng.uniform(ranges.contrast.lo, ranges.contrast.hi);
  s.saturation = rng.uniform(ranges.saturation.lo, ranges.saturation.hi);
  return s;
}

torch::Tensor apply_jitter(const torch::Tensor& img, const JitterStep& step) {
  check_image(img, "color_jitter");
  auto out = img.clone();
  // A zero delta leaves the image untouched bit for bit.
  if (step.brightness != 0.0) {
    out = (out + static_cast<float>(step.brightness)).clamp(0.0, 1.0);
  }
  if (step.contrast != 0.0) {
    const auto mean = luminance(out).mean();
    out = ((out - mean) * static_cast<float>(1.0 + step.contrast) + mean).clamp(0.0, 1.0);
  }
  if (step.saturation != 0.0 && out.size(0) == 3) {
    const auto gray = luminance(out).unsqueeze(0);
    out = ((out - gray) * static_cast<float>(1.0 + step.saturation) + gray).clamp(0.0, 1.0);
  }
  return out;
}

torch::Tensor color_jitter(const torch::Tensor& img, std::uint64_t seed, const JitterRanges& ranges) {
  return apply_jitter(img, draw_jitter(ranges, seed));
}

CutStep draw_cut(std::int64_t height, std::int64_t width, const AugmentationConfig& cfg, std::uint64_t seed) {
  Rng rng(seed);
  const double area = rng.uniform(cfg.cut_area_frac.lo, cfg.cut_area_frac.hi) * static_cast<double>(height * width);
  const double aspect = rng.uniform(cfg.cut_aspect.lo, cfg.cut_aspect.hi);
  const auto h = std::clamp<std::int64_t>(std::llround(std::sqrt(area / aspect)), 1, height);
  const auto w = std::clamp<std::int64_t>(std::llround(std::sqrt(area * aspect)), 1, width);
  CutStep cut;
  cut.height = static_cast<int>(h);
  cut.width = static_cast<int>(w);
  cut.top = static_cast<int>(rng.between(0, height - h));
  cut.left = static_cast<int>(rng.between(0, width - w));
  cut.fill_zero = rng.bernoulli(cfg.cut_fill_zero_prob);
  return cut;
}

torch::Tensor cut_mask(std::int64_t height, std::int64_t width, const CutStep& cut) {
  auto mask = torch::ones({1, height, width});
  mask.slice(1, cut.top, cut.top + cut.height).slice(2, cut.left, cut.left + cut.width).zero_();
  return mask;
}

namespace {

torch::Tensor apply_cut(const torch::Tensor& img, const torch::Tensor& prime, const CutStep& cut) {
  auto out = img.clone();
  auto region = out.slice(1, cut.top, cut.top + cut.height).slice(2, cut.left, cut.left + cut.width);
  if (cut.fill_zero) {
    region.zero_();
  } else {
    region.copy_(prime.slice(1, cut.top, cut.top + cut.height).slice(2, cut.left, cut.left + cut.width));
  }
  return out;
}

torch::Tensor apply_prime_steps(const torch::Tensor& img, const Recipe& recipe) {
  auto out = img.clone();
  for (const auto& s : recipe.steps) {
    if (const auto* r = std::get_if<RotateStep>(&s)) out = rotate(out, r->angle);
    if (const auto* p = std::get_if<PermStep>(&s)) out = apply_perm(out, *p);
    if (const auto* j = std::get_if<JitterStep>(&s)) out = apply_jitter(out, *j);
  }
  return out;
}

}  // namespace

AnomalySample make_prime_anomaly(const torch::Tensor& img, const AugmentationConfig& cfg) {
  check_image(img, "make_prime_anomaly");
  Recipe recipe;
  recipe.seed = cfg.seed;
  recipe.kind = AnomalyKind::prime;
  if (cfg.use_rotate) {
    if (cfg.rotation_angles.empty()) throw ConfigError("rotation enabled with no angles");
    Rng rng(derive_seed(cfg.seed, kRotateStream));
    recipe.steps.emplace_back(RotateStep{cfg.rotation_angles[rng.below(cfg.rotation_angles.size())]});
  }
  if (cfg.use_perm) recipe.steps.emplace_back(draw_perm(cfg.perm_grid, derive_seed(cfg.seed, kPermStream)));
  if (cfg.use_jitter) recipe.steps.emplace_back(draw_jitter(cfg.jitter, derive_seed(cfg.seed, kJitterStream)));

  AnomalySample sample;
  sample.image = apply_prime_steps(img, recipe);
  sample.mask = torch::zeros({1, img.size(1), img.size(2)});
  sample.recipe = std::move(recipe);
  return sample;
}

AnomalySample make_cut_anomaly(const torch::Tensor& img, const AnomalySample& prime, const AugmentationConfig& cfg) {
  check_image(img, "make_cut_anomaly");
  if (!prime.image.defined() || prime.image.sizes() != img.sizes()) {
    throw ShapeError("make_cut_anomaly: prime image shape differs from input");
  }
  const auto cut = draw_cut(img.size(1), img.size(2), cfg, derive_seed(cfg.seed, kCutStream));
  AnomalySample sample;
  sample.image = apply_cut(img, prime.image, cut);
  sample.mask = cut_mask(img.size(1), img.size(2), cut);
  sample.recipe = prime.recipe;
  sample.recipe.seed = cfg.seed;
  sample.recipe.kind = AnomalyKind::cut;
  sample.recipe.steps.emplace_back(cut);
  return sample;
}

AnomalySample replay(const torch::Tensor& img, const Recipe& recipe) {
  check_image(img, "replay");
  AnomalySample sample;
  sample.recipe = recipe;
  const auto prime = apply_prime_steps(img, recipe);
  if (recipe.kind == AnomalyKind::prime) {
    sample.image = prime;
    sample.mask = torch::zeros({1, img.size(1), img.size(2)});
    return sample;
  }
  const auto* cut = find_step<CutStep>(recipe);
  if (cut == nullptr) throw ConfigError("replay: cut recipe without a cut step");
  sample.image = apply_cut(img, prime, *cut);
  sample.mask = cut_mask(img.size(1), img.size(2), *cut);
  return sample;
}

AnomalyBatch sample_anomaly_batch(const torch::Tensor& batch, const AugmentationConfig& cfg) {
  check_image_batch(batch, "sample_anomaly_batch");
  const auto n = batch.size(0);
  if (n == 0) throw ShapeError("sample_anomaly_batch: empty batch");

  std::vector<torch::Tensor> images, masks;
  AnomalyBatch out;
  images.reserve(n);
  masks.reserve(n);
  out.recipes.reserve(n);
  for (int64_t i = 0; i < n; ++i) {
    const auto sample_seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(i));
    auto sample_cfg = cfg;
    sample_cfg.seed = derive_seed(sample_seed, kPrimeStream);
    const auto img = batch[i];
    auto sample = make_prime_anomaly(img, sample_cfg);
    if (Rng(derive_seed(sample_seed, kKindStream)).bernoulli(0.5)) {
      sample = make_cut_anomaly(img, sample, sample_cfg);
    }
    images.push_back(sample.image);
    masks.push_back(sample.mask);
    out.recipes.push_back(std::move(sample.recipe));
  }
  out.images = torch::stack(images);
  out.masks = torch::stack(masks);
  return out;
}

}  // namespace attnad::synth
