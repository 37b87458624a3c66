#pragma once

#include <torch/torch.h>

#include <filesystem>
#include <string>

namespace attnad::data {

/// Decode an image file to [channels, size, size] float32 in [0, 1].
/// Grayscale files are replicated when `channels == 3`. Resizing is bilinear
/// on 8-bit data, so constant images stay exactly constant.
torch::Tensor load_image(const std::filesystem::path& path, int channels, int size);

/// Decode a ground-truth defect mask (non-zero = defect) to a normal map
/// [1, size, size] with 1 = normal, 0 = defect. Nearest-neighbour resize.
torch::Tensor load_defect_mask(const std::filesystem::path& path, int size);

/// Encode [C, H, W] in [0, 1] as an 8-bit PNG.
void save_png(const std::filesystem::path& path, const torch::Tensor& image);

/// Horizontal strip of same-height images; single-channel panels are
/// replicated to three channels.
torch::Tensor hstack_panels(const std::vector<torch::Tensor>& panels);

/// Lower-case hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

}  // namespace attnad::data
