#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "attnad/adgan/adgan.hpp"
#include "attnad/attention/networks.hpp"
#include "attnad/metrics/protocol.hpp"
#include "attnad/metrics/report.hpp"
#include "attnad/pipeline/run_config.hpp"

namespace attnad::pipeline {

/// Project version plus the tensor library version, recorded in manifests.
std::string version_fingerprint();

struct RunEvent {
  std::string name;         // e.g. stage1_start, stage1_checkpoint, stage2_start
  std::string wall_time;    // ISO-8601 UTC, millisecond resolution
  std::int64_t seq = 0;     // strictly increasing within a run directory
  std::int64_t step = -1;
};

struct DivergenceInfo {
  std::string stage;
  std::int64_t step = 0;
  std::string checkpoint;
  std::string message;
};

struct RunManifest {
  nlohmann::json config;  // resolved config snapshot
  std::string version;
  std::string status = "ok";  // ok | interrupted | diverged
  std::map<std::string, std::string> checkpoints;  // stage1, stage2 (final checkpoints)
  std::map<std::string, std::string> outputs;
  std::vector<RunEvent> events;
  std::map<std::string, double> wall_clock_seconds;
  /// Hash of the frozen stage-1 generator before and after stage 2.
  std::string stage1_hash_before_stage2;
  std::string stage1_hash_after_stage2;
  std::optional<DivergenceInfo> divergence;
  nlohmann::json metrics = nlohmann::json::object();

  nlohmann::json to_json() const;
  static RunManifest from_json(const nlohmann::json& j);

  /// First event with this name, or nullptr.
  const RunEvent* find_event(const std::string& name) const;
};

RunManifest read_run_manifest(const std::filesystem::path& path);
void write_run_manifest(const std::filesystem::path& path, const RunManifest& m);

struct RunOptions {
  /// Continue from the newest checkpoint in the output directory.
  bool resume = false;
  /// Stop after this many training steps in this invocation (simulated
  /// crash for resume tests); negative means never.
  std::int64_t stop_after_steps = -1;
  /// Progress lines on stderr.
  bool verbose = false;
};

data::SplitDataset load_dataset(const DatasetRef& ref);

/// Uniform batch indices for a given step; a pure function of (n, size, seed).
std::vector<std::int64_t> batch_indices(std::int64_t n, std::int64_t batch_size, std::uint64_t seed);

/// Train stage 1, freeze it, train stage 2, evaluate and write every
/// artifact under cfg.output_dir. A non-finite loss writes a diagnostic
/// checkpoint, records it in the manifest and rethrows TrainingDivergence.
RunManifest run_two_stage(const RunConfig& cfg, const RunOptions& options = {});

struct ScoredTestSet {
  /// Records per score source; all sources share sample order and pixel maps.
  std::map<std::string, std::vector<metrics::ScoreRecord>> by_source;
  torch::Tensor attention;  // [N, 1, H, W]
};

/// Score every test image with every available source: recon_loss and
/// attn_discriminator always, adgan when `adgan_model` is non-null.
ScoredTestSet score_test_set(attention::AttentionGenerator& gen, attention::Discriminator& disc,
                             adgan::Adgan* adgan_model, const metrics::OneClassSplit& split,
                             std::int64_t batch_size);

/// Build the report for the configured primary source and write report.json,
/// scores.csv, roc.csv, roc.png and overlays into `out_dir`. Returns output
/// paths keyed by kind.
std::map<std::string, std::string> write_evaluation(const ScoredTestSet& scored, const metrics::OneClassSplit& split,
                                                    const RunConfig& cfg, const std::filesystem::path& out_dir,
                                                    metrics::EvalReport* report_out = nullptr);

/// Re-evaluate a finished run from its manifest and checkpoints. Output
/// goes to `out_dir`, or to the run directory when empty.
metrics::EvalReport evaluate_run(const std::filesystem::path& manifest_path, const std::filesystem::path& out_dir = {});

/// Settings surfaced in every report (schedules, seeds, ablation, defaults).
nlohmann::json report_settings(const RunConfig& cfg);

}  // namespace attnad::pipeline
