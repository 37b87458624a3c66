#include "attnad/common/tensor_util.hpp"

#include <ATen/CPUGeneratorImpl.h>

#include <string>

#include "attnad/common/errors.hpp"

namespace attnad {

namespace {

std::string shape_str(const torch::Tensor& t) {
  std::string s = "[";
  for (int64_t i = 0; i < t.dim(); ++i) {
    if (i) s += ", ";
    s += std::to_string(t.size(i));
  }
  return s + "]";
}

}  // namespace

void check_image_batch(const torch::Tensor& t, std::string_view what, bool check_range) {
  if (!t.defined() || t.dim() != 4 || (t.size(1) != 1 && t.size(1) != 3)) {
    throw ShapeError(std::string(what) + ": expected image batch [N, C, H, W] with C in {1, 3}, got " +
                     (t.defined() ? shape_str(t) : std::string("undefined")));
  }
  if (!t.is_floating_point()) throw ShapeError(std::string(what) + ": expected floating point image");
  if (check_range && t.numel() > 0) {
    if (t.min().item<double>() < 0.0 || t.max().item<double>() > 1.0) {
      throw ShapeError(std::string(what) + ": values outside [0, 1]");
    }
  }
}

void check_image(const torch::Tensor& t, std::string_view what) {
  if (!t.defined() || t.dim() != 3 || (t.size(0) != 1 && t.size(0) != 3)) {
    throw ShapeError(std::string(what) + ": expected image [C, H, W] with C in {1, 3}, got " +
                     (t.defined() ? shape_str(t) : std::string("undefined")));
  }
}

void check_mask_aligned(const torch::Tensor& mask, const torch::Tensor& image, std::string_view what) {
  const bool ok = mask.defined() && mask.dim() == image.dim() && mask.size(-3) == 1 &&
                  mask.size(-2) == image.size(-2) && mask.size(-1) == image.size(-1) &&
                  (mask.dim() == 3 || mask.size(0) == image.size(0));
  if (!ok) {
    throw ShapeError(std::string(what) + ": mask " + (mask.defined() ? shape_str(mask) : "undefined") +
                     " not aligned with " + shape_str(image));
  }
}

void check_ingest_size(std::int64_t height, std::int64_t width) {
  if (height != width || height <= 0 || height % 16 != 0) {
    throw ShapeError("image size " + std::to_string(height) + "x" + std::to_string(width) +
                     " must be square with sides a multiple of 16");
  }
}

std::uint64_t tensor_hash(const torch::Tensor& t, std::uint64_t h) {
  auto c = t.detach().cpu().contiguous();
  const auto* bytes = static_cast<const unsigned char*>(c.data_ptr());
  const auto n = c.numel() * static_cast<int64_t>(c.element_size());
  for (int64_t i = 0; i < n; ++i) {
    h ^= bytes[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t module_hash(const torch::nn::Module& module) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& p : module.named_parameters(true)) h = tensor_hash(p.value(), h);
  for (const auto& b : module.named_buffers(true)) h = tensor_hash(b.value(), h);
  return h;
}

bool all_finite(const torch::Tensor& t) {
  return torch::isfinite(t).all().item<bool>();
}

torch::Generator make_generator(std::uint64_t seed) {
  return at::make_generator<at::CPUGeneratorImpl>(seed);
}

}  // namespace attnad
