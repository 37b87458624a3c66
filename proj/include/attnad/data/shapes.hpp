#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "attnad/data/dataset.hpp"
#include "attnad/synth/anomaly_synth.hpp"

namespace attnad::data {

enum class DefectKind { rect, scratch, blob };

/// Built-in "shapes" dataset: a coloured disk on a textured background.
/// Anomalies are normal images with one painted defect.
struct SyntheticShapesConfig {
  int canvas_size = 64;
  int channels = 3;
  int n_train = 400;
  int n_test_normal = 100;
  int n_test_anomaly = 100;
  synth::Interval noise_amplitude{0.03, 0.2};  // per-image Gaussian noise sigma
  synth::Interval disk_radius_frac{0.22, 0.3};  // of canvas size
  synth::Interval defect_size_frac{0.1, 0.25};  // defect extent, of canvas size
  std::uint64_t seed = 0;

  void validate() const;
  bool operator==(const SyntheticShapesConfig&) const = default;
};

void to_json(nlohmann::json& j, const SyntheticShapesConfig& c);
void from_json(const nlohmann::json& j, SyntheticShapesConfig& c);

struct ShapesPair {
  torch::Tensor normal;   // [C, H, W]
  torch::Tensor anomaly;  // normal with a painted defect
  torch::Tensor mask;     // [1, H, W] normal map, 0 exactly on defect pixels
  DefectKind defect = DefectKind::rect;
};

/// Normal image number `index` of the stream `stream` (0 train, 1 test normal,
/// 2 test anomaly bases).
torch::Tensor make_shapes_normal(const SyntheticShapesConfig& cfg, int stream, int index);

/// Test anomaly `index` together with the normal image it was painted on.
ShapesPair make_shapes_pair(const SyntheticShapesConfig& cfg, int index);

/// Deterministic train/test split; classes {"good", "defect"}.
SplitDataset generate_shapes_dataset(const SyntheticShapesConfig& cfg);

/// Write a dataset produced by generate_shapes_dataset in defect-tree layout
/// (PNG, 8-bit). Returns the number of files written, masks included.
std::size_t write_defect_tree(const SplitDataset& data, const std::filesystem::path& root);

std::string to_string(DefectKind kind);

}  // namespace attnad::data
