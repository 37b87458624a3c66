#include "attnad/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "attnad/common/errors.hpp"
#include "attnad/common/rng.hpp"

namespace attnad::metrics {

namespace {

template <class Score>
double auroc_impl(std::span<const Score> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw ShapeError("auroc: scores and labels differ in length");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  long double positive_rank_sum = 0.0L;
  std::uint64_t n_pos = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    // Ranks i+1 .. j share their average.
    const long double avg_rank = (static_cast<long double>(i + 1) + static_cast<long double>(j)) / 2.0L;
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] != 0) {
        positive_rank_sum += avg_rank;
        ++n_pos;
      }
    }
    i = j;
  }
  const std::uint64_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) throw UndefinedMetric("auroc: both normal and anomaly samples are required");
  const long double u = positive_rank_sum - static_cast<long double>(n_pos) * (n_pos + 1) / 2.0L;
  return static_cast<double>(u / (static_cast<long double>(n_pos) * static_cast<long double>(n_neg)));
}

void check_pixels(const ScoreRecord& r) {
  const auto n = static_cast<std::size_t>(r.height * r.width);
  if (!r.has_pixels() || r.pixel_scores.size() != n || r.pixel_labels.size() != n) {
    throw ShapeError("pixel_auroc: record '" + r.sample_id + "' lacks aligned pixel maps");
  }
}

}  // namespace

double auroc(std::span<const double> scores, std::span<const int> labels) {
  return auroc_impl<double>(scores, labels);
}

double auroc(const std::vector<ScoreRecord>& records) {
  std::vector<double> scores;
  std::vector<int> labels;
  scores.reserve(records.size());
  labels.reserve(records.size());
  for (const auto& r : records) {
    scores.push_back(r.score);
    labels.push_back(r.label);
  }
  return auroc(scores, labels);
}

double pixel_auroc(const std::vector<ScoreRecord>& records, PixelPooling pooling) {
  if (pooling == PixelPooling::pooled) {
    std::size_t total = 0;
    for (const auto& r : records) {
      check_pixels(r);
      total += r.pixel_scores.size();
    }
    std::vector<float> scores;
    std::vector<int> labels;
    scores.reserve(total);
    labels.reserve(total);
    for (const auto& r : records) {
      scores.insert(scores.end(), r.pixel_scores.begin(), r.pixel_scores.end());
      labels.insert(labels.end(), r.pixel_labels.begin(), r.pixel_labels.end());
    }
    return auroc_impl<float>(scores, labels);
  }

  double sum = 0.0;
  int used = 0;
  for (const auto& r : records) {
    check_pixels(r);
    const bool has_pos = std::any_of(r.pixel_labels.begin(), r.pixel_labels.end(), [](auto v) { return v != 0; });
    const bool has_neg = std::any_of(r.pixel_labels.begin(), r.pixel_labels.end(), [](auto v) { return v == 0; });
    if (!has_pos || !has_neg) continue;
    std::vector<int> labels(r.pixel_labels.begin(), r.pixel_labels.end());
    sum += auroc_impl<float>(r.pixel_scores, labels);
    ++used;
  }
  if (used == 0) throw UndefinedMetric("pixel_auroc: no image contains both normal and anomalous pixels");
  return sum / used;
}

std::vector<float> attention_to_pixel_scores(std::span<const float> attention) {
  std::vector<float> out(attention.size());
  std::transform(attention.begin(), attention.end(), out.begin(), [](float a) { return 1.0f - a; });
  return out;
}

double accuracy_at(std::span<const double> scores, std::span<const int> labels, double threshold) {
  if (scores.empty()) throw UndefinedMetric("accuracy: no records");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const int predicted = scores[i] > threshold ? 1 : 0;
    correct += predicted == (labels[i] != 0 ? 1 : 0);
  }
  return static_cast<double>(correct) / static_cast<double>(scores.size());
}

double best_balanced_threshold(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw ShapeError("threshold: scores and labels differ in length");
  std::vector<double> distinct(scores.begin(), scores.end());
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (distinct.empty()) throw UndefinedMetric("threshold: no records");

  std::vector<double> candidates;
  candidates.push_back(distinct.front() - 1.0);
  for (std::size_t i = 0; i + 1 < distinct.size(); ++i) {
    candidates.push_back(distinct[i] + (distinct[i + 1] - distinct[i]) / 2.0);
  }
  candidates.push_back(distinct.back() + 1.0);

  std::size_t n_pos = 0;
  for (int l : labels) n_pos += l != 0;
  const std::size_t n_neg = labels.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) throw UndefinedMetric("threshold: both classes are required");

  double best_t = candidates.front();
  double best = -1.0;
  for (double t : candidates) {
    std::size_t tp = 0, tn = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      const bool predicted = scores[i] > t;
      if (labels[i] != 0 && predicted) ++tp;
      if (labels[i] == 0 && !predicted) ++tn;
    }
    const double balanced = 0.5 * (static_cast<double>(tp) / n_pos + static_cast<double>(tn) / n_neg);
    if (balanced > best) {
      best = balanced;
      best_t = t;
    }
  }
  return best_t;
}

AccuracyResult classification_accuracy(const std::vector<ScoreRecord>& records, const ThresholdPolicy& policy) {
  std::vector<double> scores;
  std::vector<int> labels;
  for (const auto& r : records) {
    scores.push_back(r.score);
    labels.push_back(r.label != 0 ? 1 : 0);
  }
  AccuracyResult result;
  switch (policy.kind) {
    case ThresholdPolicy::Kind::fixed:
      result.threshold = policy.fixed_threshold;
      result.accuracy = accuracy_at(scores, labels, result.threshold);
      result.n_evaluation = scores.size();
      return result;
    case ThresholdPolicy::Kind::same_split:
      result.threshold = best_balanced_threshold(scores, labels);
      result.accuracy = accuracy_at(scores, labels, result.threshold);
      result.n_validation = result.n_evaluation = scores.size();
      return result;
    case ThresholdPolicy::Kind::validation_split:
      break;
  }

  if (!(policy.validation_fraction > 0.0 && policy.validation_fraction < 1.0)) {
    throw ConfigError("threshold policy: validation_fraction must lie in (0, 1)");
  }
  // Stratified seeded hold-out: shuffle each class, send the leading
  // fraction to validation.
  std::vector<double> v_scores, e_scores;
  std::vector<int> v_labels, e_labels;
  for (int cls : {0, 1}) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == cls) idx.push_back(i);
    }
    Rng rng(derive_seed(policy.seed, static_cast<std::uint64_t>(cls)));
    for (std::size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[rng.below(i)]);
    const auto n_val = static_cast<std::size_t>(std::llround(policy.validation_fraction * idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) {
      auto& s = k < n_val ? v_scores : e_scores;
      auto& l = k < n_val ? v_labels : e_labels;
      s.push_back(scores[idx[k]]);
      l.push_back(cls);
    }
  }
  auto both = [](const std::vector<int>& l) {
    return std::count(l.begin(), l.end(), 1) > 0 && std::count(l.begin(), l.end(), 0) > 0;
  };
  if (!both(v_labels) || !both(e_labels)) {
    throw UndefinedMetric("classification_accuracy: validation and evaluation splits each need both classes");
  }
  result.threshold = best_balanced_threshold(v_scores, v_labels);
  result.accuracy = accuracy_at(e_scores, e_labels, result.threshold);
  result.n_validation = v_scores.size();
  result.n_evaluation = e_scores.size();
  return result;
}

std::vector<RocPoint> roc_curve(const std::vector<ScoreRecord>& records) {
  std::vector<const ScoreRecord*> sorted;
  std::size_t n_pos = 0;
  for (const auto& r : records) {
    sorted.push_back(&r);
    n_pos += r.label != 0;
  }
  const std::size_t n_neg = records.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) throw UndefinedMetric("roc_curve: both classes are required");
  std::sort(sorted.begin(), sorted.end(), [](const auto* a, const auto* b) { return a->score > b->score; });

  std::vector<RocPoint> points{{std::numeric_limits<double>::infinity(), 0.0, 0.0}};
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < sorted.size();) {
    const double s = sorted[i]->score;
    while (i < sorted.size() && sorted[i]->score == s) {
      (sorted[i]->label != 0 ? tp : fp) += 1;
      ++i;
    }
    points.push_back({s, static_cast<double>(fp) / n_neg, static_cast<double>(tp) / n_pos});
  }
  return points;
}

std::string to_string(PixelPooling p) { return p == PixelPooling::pooled ? "pooled" : "per_image_mean"; }

PixelPooling pixel_pooling_from_string(const std::string& s) {
  if (s == "pooled") return PixelPooling::pooled;
  if (s == "per_image_mean") return PixelPooling::per_image_mean;
  throw ConfigError("unknown pixel pooling '" + s + "'");
}

std::string to_string(ThresholdPolicy::Kind k) {
  switch (k) {
    case ThresholdPolicy::Kind::validation_split:
      return "validation_split";
    case ThresholdPolicy::Kind::same_split:
      return "same_split";
    case ThresholdPolicy::Kind::fixed:
      return "fixed";
  }
  return "?";
}

ThresholdPolicy::Kind threshold_kind_from_string(const std::string& s) {
  if (s == "validation_split") return ThresholdPolicy::Kind::validation_split;
  if (s == "same_split") return ThresholdPolicy::Kind::same_split;
  if (s == "fixed") return ThresholdPolicy::Kind::fixed;
  throw ConfigError("unknown threshold policy '" + s + "'");
}

}  // namespace attnad::metrics
