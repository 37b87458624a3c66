#pragma once

#include <json.hpp>

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace attnad::synth {

struct RotateStep {
  int angle = 90;  // counter-clockwise, one of {90, 180, 270}
  bool operator==(const RotateStep&) const = default;
};

/// Tile shuffle on a grid x grid partition. Output tile i (row-major) is
/// taken from input tile order[i].
struct PermStep {
  int grid = 2;
  std::vector<int> order;
  bool operator==(const PermStep&) const = default;
};

/// Realized jitter deltas: additive brightness, contrast factor (1 + contrast)
/// about the mean luminance, saturation factor (1 + saturation) about the
/// per-pixel luminance.
struct JitterStep {
  double brightness = 0.0;
  double contrast = 0.0;
  double saturation = 0.0;
  bool operator==(const JitterStep&) const = default;
};

/// Axis-aligned rectangle replaced by zeros or by the co-located pixels of
/// the prime anomaly.
struct CutStep {
  int top = 0;
  int left = 0;
  int height = 0;
  int width = 0;
  bool fill_zero = true;
  bool operator==(const CutStep&) const = default;
  std::int64_t area() const { return static_cast<std::int64_t>(height) * width; }
};

using RecipeStep = std::variant<RotateStep, PermStep, JitterStep, CutStep>;

enum class AnomalyKind { prime, cut };

/// Everything needed to regenerate an anomaly sample from its source image
/// without touching a random number generator.
struct Recipe {
  std::uint64_t seed = 0;
  AnomalyKind kind = AnomalyKind::prime;
  std::vector<RecipeStep> steps;
  bool operator==(const Recipe&) const = default;
};

std::string step_name(const RecipeStep& step);

void to_json(nlohmann::json& j, const Recipe& r);
void from_json(const nlohmann::json& j, Recipe& r);

}  // namespace attnad::synth
