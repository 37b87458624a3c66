#include "attnad/data/dataset.hpp"

#include <algorithm>
#include <set>

#include "attnad/common/errors.hpp"
#include "attnad/common/tensor_util.hpp"
#include "attnad/data/image_io.hpp"

namespace attnad::data {

namespace fs = std::filesystem;

Dataset Dataset::subset(const std::vector<std::int64_t>& index) const {
  Dataset out;
  out.name = name;
  out.class_names = class_names;
  if (index.empty()) {
    out.images = images.defined() ? images.narrow(0, 0, 0) : images;
    if (masks.defined()) out.masks = masks.narrow(0, 0, 0);
    return out;
  }
  const auto idx = torch::tensor(index, torch::kLong);
  out.images = images.index_select(0, idx);
  if (masks.defined()) out.masks = masks.index_select(0, idx);
  for (auto i : index) {
    out.labels.push_back(labels.at(static_cast<std::size_t>(i)));
    out.ids.push_back(ids.at(static_cast<std::size_t>(i)));
  }
  return out;
}

int Dataset::class_index(const std::string& class_name) const {
  const auto it = std::find(class_names.begin(), class_names.end(), class_name);
  return it == class_names.end() ? -1 : static_cast<int>(it - class_names.begin());
}

std::vector<fs::path> list_images(const fs::path& dir) {
  static const std::set<std::string> kExt{".png", ".jpg", ".jpeg", ".bmp", ".tif", ".tiff"};
  std::vector<fs::path> out;
  if (!fs::is_directory(dir)) return out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    auto ext = e.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (kExt.count(ext)) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

torch::Tensor stack_or_empty(const std::vector<torch::Tensor>& items) {
  return items.empty() ? torch::Tensor() : torch::stack(items);
}

namespace {

fs::path find_mask(const fs::path& root, const std::string& category, const fs::path& image) {
  const auto dir = root / "ground_truth" / category;
  for (const auto& candidate : list_images(dir)) {
    if (candidate.stem().string() == image.stem().string() + "_mask") return candidate;
  }
  return {};
}

}  // namespace

SplitDataset load_defect_tree(const fs::path& root, int size, int channels) {
  check_ingest_size(size, size);
  if (!fs::is_directory(root / "train" / "good")) {
    throw DataError("defect tree '" + root.string() + "' has no train/good directory");
  }
  std::vector<std::string> categories{"good"};
  if (fs::is_directory(root / "test")) {
    std::vector<std::string> others;
    for (const auto& e : fs::directory_iterator(root / "test")) {
      if (e.is_directory() && e.path().filename() != "good") others.push_back(e.path().filename().string());
    }
    std::sort(others.begin(), others.end());
    categories.insert(categories.end(), others.begin(), others.end());
  }

  SplitDataset out;
  const auto name = root.filename().string();
  for (auto* d : {&out.train, &out.test}) {
    d->name = name;
    d->class_names = categories;
  }

  std::vector<torch::Tensor> images;
  for (const auto& p : list_images(root / "train" / "good")) {
    images.push_back(load_image(p, channels, size));
    out.train.labels.push_back(0);
    out.train.ids.push_back("train/good/" + p.filename().string());
  }
  if (images.empty()) throw DataError("defect tree '" + root.string() + "' has no training images");
  out.train.images = torch::stack(images);

  images.clear();
  std::vector<torch::Tensor> masks;
  for (std::size_t c = 0; c < categories.size(); ++c) {
    for (const auto& p : list_images(root / "test" / categories[c])) {
      images.push_back(load_image(p, channels, size));
      if (c == 0) {
        masks.push_back(torch::ones({1, size, size}));
      } else {
        const auto mask_path = find_mask(root, categories[c], p);
        if (mask_path.empty()) {
          throw DataError("anomalous test image '" + p.string() + "' has no ground-truth mask");
        }
        masks.push_back(load_defect_mask(mask_path, size));
      }
      out.test.labels.push_back(static_cast<int>(c));
      out.test.ids.push_back("test/" + categories[c] + "/" + p.filename().string());
    }
  }
  out.test.images = stack_or_empty(images);
  out.test.masks = stack_or_empty(masks);
  return out;
}

}  // namespace attnad::data
