#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "attnad/data/dataset.hpp"

namespace attnad::data {

enum class Layout {
  folder,       // root/<split>/<class>/*
  defect_tree,  // root/train/good, root/test/<category>, root/ground_truth/<category>
};

struct ManifestEntry {
  std::string path;  // relative to the dataset root, '/'-separated
  std::string split; // "train" | "test"
  std::string class_name;
  std::string mask;  // relative mask path, empty when none
  std::string sha256;
  std::string mask_sha256;

  bool operator==(const ManifestEntry&) const = default;
};

/// One header record plus one record per image, stored as JSON lines.
struct DatasetManifest {
  std::string name;
  Layout layout = Layout::folder;
  int image_size = 64;  // resize target; square, multiple of 16
  int channels = 3;
  std::vector<std::string> classes;  // index = integer label; normal first for defect trees
  bool has_masks = false;
  std::vector<ManifestEntry> entries;

  bool operator==(const DatasetManifest&) const = default;

  std::size_t count(const std::string& split, const std::string& class_name) const;
};

std::string to_string(Layout layout);
Layout layout_from_string(const std::string& s);

/// Scan `root`, hash every file and produce a manifest. Classes are sorted
/// by name, except that "good" comes first in defect trees.
DatasetManifest build_manifest(const std::filesystem::path& root, Layout layout, int image_size = 64,
                               int channels = 3);

void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);
DatasetManifest read_manifest(const std::filesystem::path& path);

/// Throws DataError naming the first missing file or checksum mismatch.
void verify_manifest(const std::filesystem::path& root, const DatasetManifest& manifest);

/// Decode every manifest entry after verifying checksums. Works for both
/// layouts; masks are loaded when the manifest has them (entries without a
/// mask get all-ones normal maps).
SplitDataset load_multiclass_archive(const std::filesystem::path& root, const DatasetManifest& manifest);

/// Convert CIFAR-10 binary batches (data_batch_*.bin, test_batch.bin) into a
/// folder-layout PNG tree under `out_root`. Returns the number of images.
std::size_t convert_cifar10_binary(const std::filesystem::path& src_dir, const std::filesystem::path& out_root);

}  // namespace attnad::data
