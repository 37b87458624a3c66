#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace attnad::metrics {

/// One evaluated sample. `label` is 0 for normal, 1 for anomaly. Pixel
/// arrays are row-major [height, width]; pixel labels use 1 for anomalous
/// pixels.
struct ScoreRecord {
  std::string sample_id;
  int label = 0;
  double score = 0.0;
  int class_id = -1;  // original (multi-class) label, -1 when unknown
  std::int64_t height = 0;
  std::int64_t width = 0;
  std::vector<float> pixel_scores;
  std::vector<std::uint8_t> pixel_labels;

  bool has_pixels() const { return !pixel_scores.empty(); }
};

/// Rank-based AUROC (Mann-Whitney U); tied scores count one half.
/// Throws UndefinedMetric unless both labels are present.
double auroc(std::span<const double> scores, std::span<const int> labels);
double auroc(const std::vector<ScoreRecord>& records);

enum class PixelPooling {
  pooled,          // one AUROC over every pixel of every record
  per_image_mean,  // mean of per-image AUROCs over images with both pixel classes
};

/// Segmentation AUROC over the records' pixel maps. Throws ShapeError when a
/// record lacks aligned pixel arrays and UndefinedMetric when no anomalous
/// (or no normal) pixel exists.
double pixel_auroc(const std::vector<ScoreRecord>& records, PixelPooling pooling = PixelPooling::pooled);

/// Per-pixel segmentation score from a generated attention map: 1 - A_Gen.
std::vector<float> attention_to_pixel_scores(std::span<const float> attention);

struct ThresholdPolicy {
  enum class Kind {
    validation_split,  // pick on a seeded stratified hold-out, report on the rest
    same_split,        // pick and report on all records (optimistic)
    fixed,             // use `fixed_threshold`
  };
  Kind kind = Kind::validation_split;
  double validation_fraction = 0.5;
  std::uint64_t seed = 0;
  double fixed_threshold = 0.5;
};

struct AccuracyResult {
  double accuracy = 0.0;
  double threshold = 0.0;
  std::size_t n_validation = 0;
  std::size_t n_evaluation = 0;
};

/// Threshold maximising balanced accuracy for "anomaly iff score > t".
/// Candidates are midpoints between consecutive distinct scores plus one
/// value below the minimum and one above the maximum; the smallest
/// maximiser wins.
double best_balanced_threshold(std::span<const double> scores, std::span<const int> labels);

/// Fraction of records classified correctly by "anomaly iff score > threshold".
double accuracy_at(std::span<const double> scores, std::span<const int> labels, double threshold);

AccuracyResult classification_accuracy(const std::vector<ScoreRecord>& records, const ThresholdPolicy& policy);

struct RocPoint {
  double threshold;
  double fpr;
  double tpr;
};
/// ROC vertices from (0, 0) to (1, 1), one per distinct score.
std::vector<RocPoint> roc_curve(const std::vector<ScoreRecord>& records);

std::string to_string(PixelPooling p);
PixelPooling pixel_pooling_from_string(const std::string& s);
std::string to_string(ThresholdPolicy::Kind k);
ThresholdPolicy::Kind threshold_kind_from_string(const std::string& s);

}  // namespace attnad::metrics
