#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace attnad::data {

/// In-memory labeled image collection. `labels[i]` indexes `class_names`.
/// `masks`, when defined, holds normal maps (1 = normal pixel, 0 = defect).
struct Dataset {
  std::string name;
  torch::Tensor images;  // [N, C, H, W]
  torch::Tensor masks;   // [N, 1, H, W] or undefined
  std::vector<int> labels;
  std::vector<std::string> ids;
  std::vector<std::string> class_names;

  std::int64_t size() const { return images.defined() ? images.size(0) : 0; }
  bool has_masks() const { return masks.defined(); }
  int channels() const { return static_cast<int>(images.size(1)); }
  int image_size() const { return static_cast<int>(images.size(2)); }
  Dataset subset(const std::vector<std::int64_t>& index) const;
  /// Index of `name` in class_names, or -1.
  int class_index(const std::string& name) const;
};

struct SplitDataset {
  Dataset train;
  Dataset test;
};

/// MVTec-style tree:
///   root/train/good/*
///   root/test/<category>/*          ("good" is the normal category)
///   root/ground_truth/<category>/<stem>_mask.<ext>
/// Anomalous test images must have a mask; good images get all-ones maps.
/// Images are resized to `size` and converted to `channels` channels.
SplitDataset load_defect_tree(const std::filesystem::path& root, int size = 128, int channels = 3);

/// Image files (png/jpg/jpeg/bmp/tif/tiff) directly inside `dir`, sorted.
std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir);

/// Stack a list of [C, H, W] tensors; empty list gives an undefined tensor.
torch::Tensor stack_or_empty(const std::vector<torch::Tensor>& items);

}  // namespace attnad::data
