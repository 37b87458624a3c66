#include "attnad/pipeline/checkpoint.hpp"

#include "attnad/common/errors.hpp"

namespace attnad::pipeline {

namespace fs = std::filesystem;

void save_checkpoint(const fs::path& path, const nlohmann::json& meta,
                     const std::function<void(torch::serialize::OutputArchive&)>& write) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  torch::serialize::OutputArchive archive;
  archive.write("meta", c10::IValue(meta.dump()));
  write(archive);
  const auto tmp = fs::path(path.string() + ".tmp");
  archive.save_to(tmp.string());
  fs::rename(tmp, path);
}

LoadedCheckpoint load_checkpoint(const fs::path& path) {
  if (!fs::is_regular_file(path)) throw DataError("checkpoint '" + path.string() + "' does not exist");
  LoadedCheckpoint out;
  try {
    out.archive.load_from(path.string());
    c10::IValue meta;
    out.archive.read("meta", meta);
    out.meta = nlohmann::json::parse(meta.toStringRef());
  } catch (const c10::Error& e) {
    throw DataError("cannot read checkpoint '" + path.string() + "': " + e.what_without_backtrace());
  } catch (const nlohmann::json::exception& e) {
    throw DataError("checkpoint '" + path.string() + "' has corrupt metadata: " + e.what());
  }
  return out;
}

}  // namespace attnad::pipeline
