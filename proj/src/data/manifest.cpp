#include "attnad/data/manifest.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <map>

#include "attnad/common/errors.hpp"
#include "attnad/common/tensor_util.hpp"
#include "attnad/data/image_io.hpp"

namespace attnad::data {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kManifestVersion = 1;

std::vector<std::string> subdirs(const fs::path& dir) {
  std::vector<std::string> out;
  if (!fs::is_directory(dir)) return out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_directory()) out.push_back(e.path().filename().string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::string rel(const fs::path& p, const fs::path& root) { return fs::relative(p, root).generic_string(); }

}  // namespace

std::size_t DatasetManifest::count(const std::string& split, const std::string& class_name) const {
  return static_cast<std::size_t>(std::count_if(entries.begin(), entries.end(), [&](const ManifestEntry& e) {
    return e.split == split && e.class_name == class_name;
  }));
}

std::string to_string(Layout layout) { return layout == Layout::folder ? "folder" : "defect_tree"; }

Layout layout_from_string(const std::string& s) {
  if (s == "folder") return Layout::folder;
  if (s == "defect_tree") return Layout::defect_tree;
  throw ConfigError("unknown dataset layout '" + s + "'");
}

DatasetManifest build_manifest(const fs::path& root, Layout layout, int image_size, int channels) {
  check_ingest_size(image_size, image_size);
  if (channels != 1 && channels != 3) throw ConfigError("channels must be 1 or 3");
  if (!fs::is_directory(root)) throw DataError("dataset root '" + root.string() + "' does not exist");

  DatasetManifest m;
  m.name = fs::absolute(root).lexically_normal().filename().string();
  if (m.name.empty()) m.name = fs::absolute(root).lexically_normal().parent_path().filename().string();
  m.layout = layout;
  m.image_size = image_size;
  m.channels = channels;

  if (layout == Layout::folder) {
    std::vector<std::string> classes;
    for (const auto& split : {"train", "test"}) {
      for (const auto& c : subdirs(root / split)) {
        if (std::find(classes.begin(), classes.end(), c) == classes.end()) classes.push_back(c);
      }
    }
    std::sort(classes.begin(), classes.end());
    if (classes.empty()) throw DataError("no class directories under '" + root.string() + "'");
    m.classes = classes;
    for (const auto& split : {"train", "test"}) {
      for (const auto& c : classes) {
        for (const auto& p : list_images(root / split / c)) {
          m.entries.push_back({rel(p, root), split, c, "", sha256_file(p), ""});
        }
      }
    }
    return m;
  }

  m.has_masks = true;
  m.classes = {"good"};
  for (const auto& c : subdirs(root / "test")) {
    if (c != "good") m.classes.push_back(c);
  }
  for (const auto& p : list_images(root / "train" / "good")) {
    m.entries.push_back({rel(p, root), "train", "good", "", sha256_file(p), ""});
  }
  for (const auto& c : m.classes) {
    const auto masks = list_images(root / "ground_truth" / c);
    for (const auto& p : list_images(root / "test" / c)) {
      ManifestEntry e{rel(p, root), "test", c, "", sha256_file(p), ""};
      if (c != "good") {
        const auto it = std::find_if(masks.begin(), masks.end(), [&](const fs::path& mp) {
          return mp.stem().string() == p.stem().string() + "_mask";
        });
        if (it == masks.end()) throw DataError("anomalous test image '" + p.string() + "' has no ground-truth mask");
        e.mask = rel(*it, root);
        e.mask_sha256 = sha256_file(*it);
      }
      m.entries.push_back(std::move(e));
    }
  }
  if (m.count("train", "good") == 0) throw DataError("defect tree '" + root.string() + "' has no training images");
  return m;
}

void write_manifest(const fs::path& path, const DatasetManifest& m) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const auto tmp = fs::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write manifest '" + path.string() + "'");
    json header{{"kind", "header"},          {"version", kManifestVersion}, {"name", m.name},
                {"layout", to_string(m.layout)}, {"image_size", m.image_size},  {"channels", m.channels},
                {"classes", m.classes},      {"has_masks", m.has_masks}};
    out << header.dump() << '\n';
    for (const auto& e : m.entries) {
      json r{{"kind", "image"}, {"path", e.path}, {"split", e.split}, {"class", e.class_name}, {"sha256", e.sha256}};
      if (!e.mask.empty()) {
        r["mask"] = e.mask;
        r["mask_sha256"] = e.mask_sha256;
      }
      out << r.dump() << '\n';
    }
  }
  fs::rename(tmp, path);
}

DatasetManifest read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest '" + path.string() + "'");
  DatasetManifest m;
  std::string line;
  bool have_header = false;
  std::size_t lineno = 0;
  try {
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      const auto r = json::parse(line);
      if (r.at("kind") == "header") {
        if (r.at("version").get<int>() != kManifestVersion) throw DataError("unsupported manifest version");
        m.name = r.at("name");
        m.layout = layout_from_string(r.at("layout"));
        m.image_size = r.at("image_size");
        m.channels = r.at("channels");
        m.classes = r.at("classes").get<std::vector<std::string>>();
        m.has_masks = r.at("has_masks");
        have_header = true;
      } else {
        ManifestEntry e;
        e.path = r.at("path");
        e.split = r.at("split");
        e.class_name = r.at("class");
        e.sha256 = r.at("sha256");
        e.mask = r.value("mask", "");
        e.mask_sha256 = r.value("mask_sha256", "");
        m.entries.push_back(std::move(e));
      }
    }
  } catch (const json::exception& ex) {
    throw DataError("manifest '" + path.string() + "' line " + std::to_string(lineno) + ": " + ex.what());
  }
  if (!have_header) throw DataError("manifest '" + path.string() + "' has no header record");
  check_ingest_size(m.image_size, m.image_size);
  for (const auto& e : m.entries) {
    if (std::find(m.classes.begin(), m.classes.end(), e.class_name) == m.classes.end()) {
      throw DataError("manifest entry '" + e.path + "' has undeclared class '" + e.class_name + "'");
    }
  }
  return m;
}

void verify_manifest(const fs::path& root, const DatasetManifest& m) {
  auto check = [&](const std::string& relpath, const std::string& expected) {
    const auto p = root / relpath;
    if (!fs::is_regular_file(p)) throw DataError("missing file '" + p.string() + "'");
    if (sha256_file(p) != expected) throw DataError("checksum mismatch for '" + p.string() + "'");
  };
  for (const auto& e : m.entries) {
    check(e.path, e.sha256);
    if (!e.mask.empty()) check(e.mask, e.mask_sha256);
  }
}

SplitDataset load_multiclass_archive(const fs::path& root, const DatasetManifest& m) {
  verify_manifest(root, m);
  std::map<std::string, int> class_id;
  for (std::size_t i = 0; i < m.classes.size(); ++i) class_id[m.classes[i]] = static_cast<int>(i);

  SplitDataset out;
  struct Acc {
    std::vector<torch::Tensor> images, masks;
  } acc[2];
  Dataset* targets[2] = {&out.train, &out.test};
  for (auto* d : targets) {
    d->name = m.name;
    d->class_names = m.classes;
  }
  for (const auto& e : m.entries) {
    const int s = e.split == "train" ? 0 : 1;
    if (e.split != "train" && e.split != "test") throw DataError("entry '" + e.path + "' has unknown split");
    torch::Tensor img;
    try {
      img = load_image(root / e.path, m.channels, m.image_size);
    } catch (const DataError&) {
      throw;
    } catch (const std::exception& ex) {
      throw DataError("cannot decode '" + (root / e.path).string() + "': " + ex.what());
    }
    acc[s].images.push_back(img);
    if (m.has_masks) {
      acc[s].masks.push_back(e.mask.empty() ? torch::ones({1, m.image_size, m.image_size})
                                            : load_defect_mask(root / e.mask, m.image_size));
    }
    targets[s]->labels.push_back(class_id.at(e.class_name));
    targets[s]->ids.push_back(e.path);
  }
  for (int s = 0; s < 2; ++s) {
    targets[s]->images = stack_or_empty(acc[s].images);
    if (!targets[s]->images.defined()) {
      targets[s]->images = torch::zeros({0, m.channels, m.image_size, m.image_size});
    }
    if (m.has_masks) {
      targets[s]->masks = acc[s].masks.empty() ? torch::ones({0, 1, m.image_size, m.image_size})
                                               : torch::stack(acc[s].masks);
    }
  }
  return out;
}

std::size_t convert_cifar10_binary(const fs::path& src_dir, const fs::path& out_root) {
  static const std::array<const char*, 10> kNames{"airplane", "automobile", "bird", "cat", "deer",
                                                  "dog",      "frog",       "horse", "ship", "truck"};
  constexpr std::size_t kRecord = 1 + 3 * 32 * 32;
  std::vector<std::pair<fs::path, std::string>> files;
  for (int i = 1; i <= 5; ++i) {
    files.emplace_back(src_dir / ("data_batch_" + std::to_string(i) + ".bin"), "train");
  }
  files.emplace_back(src_dir / "test_batch.bin", "test");

  std::size_t written = 0;
  std::vector<unsigned char> rec(kRecord);
  for (const auto& [file, split] : files) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw DataError("missing CIFAR-10 batch '" + file.string() + "'");
    for (std::size_t n = 0; in.read(reinterpret_cast<char*>(rec.data()), kRecord); ++n) {
      if (rec[0] >= kNames.size()) throw DataError("bad label in '" + file.string() + "'");
      auto t = torch::from_blob(rec.data() + 1, {3, 32, 32}, torch::kUInt8).to(torch::kFloat32) / 255.0;
      char name[32];
      std::snprintf(name, sizeof(name), "%s_%05zu.png", file.stem().string().c_str(), n);
      save_png(out_root / split / kNames[rec[0]] / name, t);
      ++written;
    }
    if (in.gcount() != 0) throw DataError("truncated CIFAR-10 batch '" + file.string() + "'");
  }
  return written;
}

}  // namespace attnad::data
