#include "attnad/pipeline/preview.hpp"

#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "attnad/common/errors.hpp"
#include "attnad/common/tensor_util.hpp"
#include "attnad/data/image_io.hpp"

namespace attnad::pipeline {

std::size_t write_synth_preview(const torch::Tensor& images, const synth::AugmentationConfig& cfg,
                                const std::filesystem::path& out_dir) {
  check_image_batch(images, "preview images", true);
  std::filesystem::create_directories(out_dir);
  const auto batch = synth::sample_anomaly_batch(images, cfg);
  std::ofstream jsonl(out_dir / "preview.jsonl", std::ios::trunc);
  if (!jsonl) throw Error("cannot write preview manifest in '" + out_dir.string() + "'");
  char name[32];
  for (std::int64_t i = 0; i < images.size(0); ++i) {
    std::snprintf(name, sizeof(name), "%05lld.png", static_cast<long long>(i));
    data::save_png(out_dir / name,
                   data::hstack_panels({images[i], batch.images[i], batch.masks[i]}));
    const auto& recipe = batch.recipes[static_cast<std::size_t>(i)];
    const auto zeros = (batch.masks[i] < 0.5).sum().item<std::int64_t>();
    nlohmann::json rec{{"file", name},
                       {"recipe", recipe},
                       {"mask_zero_count", zeros},
                       {"mask_pixels", batch.masks[i].numel()}};
    jsonl << rec.dump() << '\n';
  }
  return static_cast<std::size_t>(images.size(0));
}

}  // namespace attnad::pipeline
