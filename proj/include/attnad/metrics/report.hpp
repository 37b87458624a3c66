#pragma once

#include <json.hpp>

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "attnad/metrics/metrics.hpp"

namespace attnad::metrics {

struct ClassBreakdown {
  int class_id = -1;
  std::string name;
  int label = 0;
  std::size_t n = 0;
  double mean_score = 0.0;
  std::optional<double> auroc_vs_normal;  // anomaly classes only
};

struct EvalReport {
  std::size_t n_samples = 0;
  std::string score_source;
  double auroc = 0.0;
  std::optional<double> pixel_auroc;
  PixelPooling pixel_pooling = PixelPooling::pooled;
  ThresholdPolicy threshold_policy;
  AccuracyResult accuracy;
  std::vector<ClassBreakdown> per_class;
  /// Detection AUROC of every score source that was computed.
  std::map<std::string, double> auroc_by_source;
  /// Free-form settings surfaced for reproducibility (steps, batch sizes, seeds).
  nlohmann::json settings = nlohmann::json::object();

  nlohmann::json to_json() const;
};

/// Builds the report from records. Pixel AUROC is filled iff every record
/// carries pixel maps. `class_names[id]` names the original classes.
EvalReport build_report(const std::vector<ScoreRecord>& records, const std::vector<std::string>& class_names,
                        const std::string& score_source, const ThresholdPolicy& policy, PixelPooling pooling);

void write_scores_csv(const std::filesystem::path& path, const std::vector<ScoreRecord>& records);
void write_roc_csv(const std::filesystem::path& path, const std::vector<RocPoint>& points);
void write_roc_png(const std::filesystem::path& path, const std::vector<RocPoint>& points, int size = 256);

}  // namespace attnad::metrics
