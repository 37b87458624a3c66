#pragma once

#include <torch/torch.h>

#include <filesystem>
#include <functional>

#include <json.hpp>

namespace attnad::pipeline {

/// Checkpoint = torch archive holding a JSON "meta" string plus whatever the
/// writer stores. Files are written to a temporary name and renamed, so a
/// checkpoint on disk is always complete.
void save_checkpoint(const std::filesystem::path& path, const nlohmann::json& meta,
                     const std::function<void(torch::serialize::OutputArchive&)>& write);

struct LoadedCheckpoint {
  nlohmann::json meta;
  torch::serialize::InputArchive archive;
};

/// Throws DataError when the file is missing or not a checkpoint.
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace attnad::pipeline
