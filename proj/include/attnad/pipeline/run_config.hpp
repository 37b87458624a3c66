#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "attnad/adgan/adgan.hpp"
#include "attnad/attention/networks.hpp"
#include "attnad/data/dataset.hpp"
#include "attnad/data/shapes.hpp"
#include "attnad/metrics/metrics.hpp"
#include "attnad/synth/anomaly_synth.hpp"

namespace attnad::pipeline {

struct DatasetRef {
  enum class Kind { shapes, manifest, defect_tree };
  Kind kind = Kind::shapes;
  /// Manifest file (kind == manifest) or tree root (kind == defect_tree).
  std::string path;
  /// Dataset root for manifests; defaults to the manifest's directory.
  std::string root;
  int image_size = 64;
  int channels = 3;
  data::SyntheticShapesConfig shapes;

  bool operator==(const DatasetRef&) const = default;
};

struct StageSchedule {
  std::int64_t steps = 5000;
  std::int64_t batch_size = 16;
  std::uint64_t seed = 0;
  std::int64_t checkpoint_every = 500;
  std::int64_t log_every = 10;

  bool operator==(const StageSchedule&) const = default;
};

enum class ScoreSource { adgan, recon_loss, attn_discriminator };

struct Ablation {
  bool disable_att = false;       // drop the attention loss entirely
  bool disable_adv_ano = false;   // drop the adversarial anomaly loss
  /// adgan = normal two-stage run; anything else skips stage 2 and uses
  /// that stage-1 score for detection.
  ScoreSource score = ScoreSource::adgan;
  /// false = train on normal data only (no synthesized anomalies at all).
  bool synthesize_anomalies = true;

  bool operator==(const Ablation&) const = default;
};

struct EvalOptions {
  metrics::PixelPooling pixel_pooling = metrics::PixelPooling::pooled;
  metrics::ThresholdPolicy threshold;
  bool write_overlays = true;
  std::int64_t batch_size = 64;

  bool operator==(const EvalOptions& o) const {
    return pixel_pooling == o.pixel_pooling && threshold.kind == o.threshold.kind &&
           threshold.validation_fraction == o.threshold.validation_fraction && threshold.seed == o.threshold.seed &&
           threshold.fixed_threshold == o.threshold.fixed_threshold && write_overlays == o.write_overlays &&
           batch_size == o.batch_size;
  }
};

struct RunConfig {
  DatasetRef dataset;
  std::string normal_class = "good";
  synth::AugmentationConfig augmentation;
  attention::AttentionNetConfig attention;
  adgan::AdganConfig adgan;
  StageSchedule stage1;
  StageSchedule stage2;
  Ablation ablation;
  EvalOptions eval;
  std::string output_dir = "runs/default";
  int threads = 1;

  bool operator==(const RunConfig&) const = default;

  /// Throws ConfigError on invalid or mutually inconsistent settings.
  void validate() const;

  /// Stage-1 network config with ablation flags folded into the loss weights.
  attention::AttentionNetConfig effective_attention() const;
  /// Stage-2 config; the anomaly-as-fake term is dropped without synthesized anomalies.
  adgan::AdganConfig effective_adgan() const;
  bool runs_stage2() const { return ablation.score == ScoreSource::adgan; }
};

std::string to_string(ScoreSource s);
ScoreSource score_source_from_string(const std::string& s);
std::string to_string(DatasetRef::Kind k);

/// Unknown keys anywhere in the document raise ConfigError. Stage and
/// augmentation seeds must be given explicitly.
RunConfig run_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RunConfig& cfg);

RunConfig load_run_config(const std::filesystem::path& path);
void save_run_config(const std::filesystem::path& path, const RunConfig& cfg);

nlohmann::json to_json(const synth::AugmentationConfig& c);
synth::AugmentationConfig augmentation_from_json(const nlohmann::json& j);

}  // namespace attnad::pipeline
