#include "attnad/data/shapes.hpp"

#include <opencv2/imgproc.hpp>

#include <cmath>
#include <array>
#include <cstdio>
#include <set>

#include "attnad/common/errors.hpp"
#include "attnad/common/rng.hpp"
#include "attnad/common/tensor_util.hpp"
#include "attnad/data/image_io.hpp"

namespace attnad::data {

using nlohmann::json;

namespace {

constexpr std::uint64_t kStreamBase = 0x5a4e;
constexpr std::uint64_t kDefectStream = 0xdef;

void check_interval(const synth::Interval& iv, double lo, double hi, const char* what) {
  if (!(iv.lo <= iv.hi) || iv.lo < lo || iv.hi > hi) {
    throw ConfigError(std::string("shapes: ") + what + " out of range");
  }
}

// Mean-preserving colour near a fixed palette entry.
torch::Tensor palette_color(Rng& rng, std::array<double, 3> base, double spread, int channels) {
  std::vector<float> c;
  for (int k = 0; k < 3; ++k) c.push_back(static_cast<float>(std::clamp(base[k] + rng.uniform(-spread, spread), 0.0, 1.0)));
  auto t = torch::tensor(c);
  if (channels == 1) t = (0.299 * t[0] + 0.587 * t[1] + 0.114 * t[2]).reshape({1});
  return t.view({channels, 1, 1});
}

torch::Tensor to_mask_tensor(const cv::Mat& m) {
  return torch::from_blob(m.data, {1, m.rows, m.cols}, torch::kUInt8).to(torch::kFloat32);
}

}  // namespace

void SyntheticShapesConfig::validate() const {
  if (canvas_size < 16 || canvas_size % 16 != 0) throw ConfigError("shapes: canvas_size must be a multiple of 16");
  if (channels != 1 && channels != 3) throw ConfigError("shapes: channels must be 1 or 3");
  if (n_train < 1 || n_test_normal < 1 || n_test_anomaly < 1) throw ConfigError("shapes: split counts must be positive");
  check_interval(noise_amplitude, 0.0, 0.5, "noise_amplitude");
  check_interval(disk_radius_frac, 0.05, 0.45, "disk_radius_frac");
  check_interval(defect_size_frac, 0.02, 0.5, "defect_size_frac");
}

void to_json(json& j, const SyntheticShapesConfig& c) {
  j = json{{"canvas_size", c.canvas_size},
           {"channels", c.channels},
           {"n_train", c.n_train},
           {"n_test_normal", c.n_test_normal},
           {"n_test_anomaly", c.n_test_anomaly},
           {"noise_amplitude", {c.noise_amplitude.lo, c.noise_amplitude.hi}},
           {"disk_radius_frac", {c.disk_radius_frac.lo, c.disk_radius_frac.hi}},
           {"defect_size_frac", {c.defect_size_frac.lo, c.defect_size_frac.hi}},
           {"seed", c.seed}};
}

void from_json(const json& j, SyntheticShapesConfig& c) {
  static const std::set<std::string> kKeys{"canvas_size",      "channels",         "n_train",
                                           "n_test_normal",    "n_test_anomaly",   "noise_amplitude",
                                           "disk_radius_frac", "defect_size_frac", "seed"};
  for (const auto& [k, v] : j.items()) {
    if (!kKeys.count(k)) throw ConfigError("shapes: unknown key '" + k + "'");
  }
  SyntheticShapesConfig d;
  auto iv = [&](const char* key, synth::Interval def) {
    if (!j.contains(key)) return def;
    const auto& a = j.at(key);
    if (!a.is_array() || a.size() != 2) throw ConfigError(std::string("shapes: ") + key + " must be [lo, hi]");
    return synth::Interval{a[0].get<double>(), a[1].get<double>()};
  };
  c.canvas_size = j.value("canvas_size", d.canvas_size);
  c.channels = j.value("channels", d.channels);
  c.n_train = j.value("n_train", d.n_train);
  c.n_test_normal = j.value("n_test_normal", d.n_test_normal);
  c.n_test_anomaly = j.value("n_test_anomaly", d.n_test_anomaly);
  c.noise_amplitude = iv("noise_amplitude", d.noise_amplitude);
  c.disk_radius_frac = iv("disk_radius_frac", d.disk_radius_frac);
  c.defect_size_frac = iv("defect_size_frac", d.defect_size_frac);
  c.seed = j.value("seed", d.seed);
}

std::string to_string(DefectKind kind) {
  switch (kind) {
    case DefectKind::rect: return "rect";
    case DefectKind::scratch: return "scratch";
    case DefectKind::blob: return "blob";
  }
  return "?";
}

torch::Tensor make_shapes_normal(const SyntheticShapesConfig& cfg, int stream, int index) {
  const std::uint64_t seed = derive_seed(derive_seed(cfg.seed, kStreamBase + stream), static_cast<std::uint64_t>(index));
  Rng rng(seed);
  const int s = cfg.canvas_size;

  // Background: muted grey-blue with a random linear gradient.
  auto bg = palette_color(rng, {0.35, 0.4, 0.45}, 0.05, cfg.channels);
  const double angle = rng.uniform(0.0, 2.0 * M_PI);
  const double slope = rng.uniform(0.05, 0.15);
  auto coord = torch::linspace(-0.5, 0.5, s);
  auto ramp = (std::cos(angle) * coord.view({1, s}) + std::sin(angle) * coord.view({s, 1})) * slope;
  auto img = bg + ramp.unsqueeze(0);

  // Motif: warm disk near the centre.
  cv::Mat disk(s, s, CV_8UC1, cv::Scalar(0));
  const double radius = rng.uniform(cfg.disk_radius_frac.lo, cfg.disk_radius_frac.hi) * s;
  const int cx = static_cast<int>(s / 2 + rng.between(-s / 20, s / 20));
  const int cy = static_cast<int>(s / 2 + rng.between(-s / 20, s / 20));
  cv::circle(disk, {cx, cy}, static_cast<int>(std::lround(radius)), cv::Scalar(1), cv::FILLED, cv::LINE_8);
  auto disk_mask = to_mask_tensor(disk);
  auto fg = palette_color(rng, {0.85, 0.6, 0.2}, 0.06, cfg.channels);
  img = img * (1 - disk_mask) + fg * disk_mask;

  const double sigma = rng.uniform(cfg.noise_amplitude.lo, cfg.noise_amplitude.hi);
  auto gen = make_generator(rng.next_u64());
  img = img + sigma * torch::randn({cfg.channels, s, s}, gen);
  return img.clamp(0.0, 1.0).contiguous();
}

ShapesPair make_shapes_pair(const SyntheticShapesConfig& cfg, int index) {
  ShapesPair out;
  out.normal = make_shapes_normal(cfg, 2, index);
  Rng rng(derive_seed(derive_seed(cfg.seed, kDefectStream), static_cast<std::uint64_t>(index)));
  const int s = cfg.canvas_size;
  const int extent = std::max(3, static_cast<int>(std::lround(rng.uniform(cfg.defect_size_frac.lo, cfg.defect_size_frac.hi) * s)));
  const int cx = static_cast<int>(rng.between(extent / 2, s - 1 - extent / 2));
  const int cy = static_cast<int>(rng.between(extent / 2, s - 1 - extent / 2));

  cv::Mat m(s, s, CV_8UC1, cv::Scalar(0));
  out.defect = static_cast<DefectKind>(rng.below(3));
  switch (out.defect) {
    case DefectKind::rect: {
      const int w = extent, h = std::max(2, static_cast<int>(std::lround(extent * rng.uniform(0.5, 1.0))));
      cv::rectangle(m, cv::Rect(cx - w / 2, cy - h / 2, w, h), cv::Scalar(1), cv::FILLED, cv::LINE_8);
      break;
    }
    case DefectKind::scratch: {
      const double a = rng.uniform(0.0, M_PI);
      const double half = extent * 0.75;
      const cv::Point p0(static_cast<int>(std::lround(cx - half * std::cos(a))), static_cast<int>(std::lround(cy - half * std::sin(a))));
      const cv::Point p1(static_cast<int>(std::lround(cx + half * std::cos(a))), static_cast<int>(std::lround(cy + half * std::sin(a))));
      cv::line(m, p0, p1, cv::Scalar(1), static_cast<int>(rng.between(2, 3)), cv::LINE_8);
      break;
    }
    case DefectKind::blob: {
      const cv::Size axes(std::max(2, extent / 2), std::max(2, static_cast<int>(std::lround(extent / 2 * rng.uniform(0.4, 1.0)))));
      cv::ellipse(m, {cx, cy}, axes, rng.uniform(0.0, 180.0), 0, 360, cv::Scalar(1), cv::FILLED, cv::LINE_8);
      break;
    }
  }
  auto defect = to_mask_tensor(m);

  // Defect colour: dark, purple-ish or bright, away from both background and disk.
  static const std::array<std::array<double, 3>, 3> kColors{{{0.05, 0.05, 0.08}, {0.55, 0.1, 0.6}, {0.95, 0.95, 0.9}}};
  auto color = palette_color(rng, kColors[rng.below(kColors.size())], 0.05, cfg.channels);
  auto anomaly = out.normal * (1 - defect) + color * defect;

  // Every defect pixel must differ from the normal image; nudge the rare
  // pixel where the painted colour coincides with the noisy background.
  auto same = ((anomaly - out.normal).abs().amax(0, true) < 0.05) & (defect > 0.5);
  if (same.any().item<bool>()) {
    auto flipped = torch::where(out.normal > 0.5, out.normal - 0.5, out.normal + 0.5);
    anomaly = torch::where(same.expand_as(anomaly), flipped, anomaly);
  }
  out.anomaly = anomaly.contiguous();
  out.mask = (1 - defect).contiguous();
  return out;
}

SplitDataset generate_shapes_dataset(const SyntheticShapesConfig& cfg) {
  cfg.validate();
  SplitDataset out;
  for (auto* d : {&out.train, &out.test}) {
    d->name = "shapes";
    d->class_names = {"good", "defect"};
  }
  char id[64];
  std::vector<torch::Tensor> images;
  for (int i = 0; i < cfg.n_train; ++i) {
    images.push_back(make_shapes_normal(cfg, 0, i));
    out.train.labels.push_back(0);
    std::snprintf(id, sizeof(id), "train/good/%04d.png", i);
    out.train.ids.push_back(id);
  }
  out.train.images = torch::stack(images);

  images.clear();
  std::vector<torch::Tensor> masks;
  const int s = cfg.canvas_size;
  for (int i = 0; i < cfg.n_test_normal; ++i) {
    images.push_back(make_shapes_normal(cfg, 1, i));
    masks.push_back(torch::ones({1, s, s}));
    out.test.labels.push_back(0);
    std::snprintf(id, sizeof(id), "test/good/%04d.png", i);
    out.test.ids.push_back(id);
  }
  for (int i = 0; i < cfg.n_test_anomaly; ++i) {
    auto pair = make_shapes_pair(cfg, i);
    images.push_back(pair.anomaly);
    masks.push_back(pair.mask);
    out.test.labels.push_back(1);
    std::snprintf(id, sizeof(id), "test/defect/%04d.png", i);
    out.test.ids.push_back(id);
  }
  out.test.images = torch::stack(images);
  out.test.masks = torch::stack(masks);
  return out;
}

std::size_t write_defect_tree(const SplitDataset& data, const std::filesystem::path& root) {
  std::size_t written = 0;
  auto emit = [&](const Dataset& d, bool test) {
    for (std::int64_t i = 0; i < d.size(); ++i) {
      const auto& id = d.ids[static_cast<std::size_t>(i)];
      save_png(root / id, d.images[i]);
      ++written;
      const auto cls = d.class_names.at(static_cast<std::size_t>(d.labels[static_cast<std::size_t>(i)]));
      if (test && cls != "good" && d.has_masks()) {
        const auto stem = std::filesystem::path(id).stem().string();
        save_png(root / "ground_truth" / cls / (stem + "_mask.png"), 1 - d.masks[i]);
        ++written;
      }
    }
  };
  emit(data.train, false);
  emit(data.test, true);
  return written;
}

}  // namespace attnad::data
