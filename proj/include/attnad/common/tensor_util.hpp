#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <string_view>

namespace attnad {

// Shape conventions used throughout the project:
//   image batch  [N, C, H, W] float32 in [0, 1], C in {1, 3}
//   single image [C, H, W]
//   mask batch   [N, 1, H, W]; 1 = normal / activated, 0 = anomalous.

/// Throws ShapeError unless `t` is a float image batch [N, C, H, W] with
/// C in {1, 3}. Value range is checked when `check_range` is set.
void check_image_batch(const torch::Tensor& t, std::string_view what, bool check_range = false);

/// Single image [C, H, W].
void check_image(const torch::Tensor& t, std::string_view what);

/// Mask batch [N, 1, H, W] spatially aligned with `image` (batch or single).
void check_mask_aligned(const torch::Tensor& mask, const torch::Tensor& image, std::string_view what);

/// Ingestion-time invariant: square and both sides multiples of 16.
void check_ingest_size(std::int64_t height, std::int64_t width);

/// 64-bit FNV-1a over the raw bytes of a contiguous copy of `t`.
std::uint64_t tensor_hash(const torch::Tensor& t, std::uint64_t seed = 0xcbf29ce484222325ULL);

/// Hash over all parameters and buffers of a module, in registration order.
std::uint64_t module_hash(const torch::nn::Module& module);

bool all_finite(const torch::Tensor& t);

/// CPU generator seeded deterministically.
torch::Generator make_generator(std::uint64_t seed);

}  // namespace attnad
