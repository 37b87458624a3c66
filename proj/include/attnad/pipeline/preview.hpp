#pragma once

#include <torch/torch.h>

#include <filesystem>

#include "attnad/synth/anomaly_synth.hpp"

namespace attnad::pipeline {

/// Synthesize anomalies for `images` [N, C, H, W] with the batch sampler and
/// write one PNG strip per image (input | anomaly | mask) plus
/// preview.jsonl holding the seed, recipe and mask statistics of each one.
/// Returns the number of samples written.
std::size_t write_synth_preview(const torch::Tensor& images, const synth::AugmentationConfig& cfg,
                                const std::filesystem::path& out_dir);

}  // namespace attnad::pipeline
