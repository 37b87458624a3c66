#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "attnad/pipeline/run.hpp"
#include "attnad/pipeline/run_config.hpp"

namespace attnad::pipeline {

/// Known conditions, in table order.
const std::vector<std::string>& matrix_conditions();

/// Reference mean detection AUROC on CIFAR-10 for each condition plus the
/// semi-supervised row, printed under every matrix table for comparison.
const std::vector<std::pair<std::string, double>>& matrix_reference_means();

struct MatrixConfig {
  RunConfig base;
  std::vector<std::string> conditions;  // default: all
  std::vector<std::string> classes;     // normal classes; default: base.normal_class
};

MatrixConfig matrix_config_from_json(const nlohmann::json& j);
MatrixConfig load_matrix_config(const std::filesystem::path& path);

/// Base config specialised to one condition and normal class. "base" trains
/// without synthesized anomalies; the others enable only the named
/// hard augmentations for the prime anomaly.
RunConfig condition_config(const RunConfig& base, const std::string& condition, const std::string& normal_class);

struct MatrixReport {
  std::vector<std::string> conditions;
  std::vector<std::string> classes;
  std::string score_source;
  /// auroc[condition][class]; absent when the run produced no value.
  std::map<std::string, std::map<std::string, double>> auroc;

  std::optional<double> mean(const std::string& condition) const;
  nlohmann::json to_json() const;
  /// One row per condition, one column per class and a mean column,
  /// followed by the reference footer.
  std::string to_markdown() const;
};

/// Runs every (condition, class) pair under base.output_dir/<condition>/<class>
/// and writes matrix.json and matrix.md next to them.
MatrixReport run_augmentation_matrix(const MatrixConfig& cfg, const RunOptions& options = {});

}  // namespace attnad::pipeline
