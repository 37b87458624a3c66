#include "attnad/metrics/report.hpp"

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include <fstream>
#include <set>

#include "attnad/common/errors.hpp"

namespace attnad::metrics {

nlohmann::json EvalReport::to_json() const {
  nlohmann::json j;
  j["n_samples"] = n_samples;
  j["score_source"] = score_source;
  j["auroc"] = auroc;
  if (pixel_auroc) j["pixel_auroc"] = *pixel_auroc;
  j["pixel_pooling"] = to_string(pixel_pooling);
  j["accuracy"] = {{"value", accuracy.accuracy},
                   {"threshold", accuracy.threshold},
                   {"policy", to_string(threshold_policy.kind)},
                   {"validation_fraction", threshold_policy.validation_fraction},
                   {"n_validation", accuracy.n_validation},
                   {"n_evaluation", accuracy.n_evaluation}};
  auto classes = nlohmann::json::array();
  for (const auto& c : per_class) {
    nlohmann::json e{{"class_id", c.class_id}, {"name", c.name}, {"label", c.label}, {"n", c.n},
                     {"mean_score", c.mean_score}};
    e["auroc_vs_normal"] = c.auroc_vs_normal ? nlohmann::json(*c.auroc_vs_normal) : nlohmann::json(nullptr);
    classes.push_back(std::move(e));
  }
  j["per_class"] = std::move(classes);
  j["auroc_by_source"] = auroc_by_source;
  j["settings"] = settings;
  return j;
}

EvalReport build_report(const std::vector<ScoreRecord>& records, const std::vector<std::string>& class_names,
                        const std::string& score_source, const ThresholdPolicy& policy, PixelPooling pooling) {
  EvalReport report;
  report.n_samples = records.size();
  report.score_source = score_source;
  report.auroc = auroc(records);
  report.pixel_pooling = pooling;
  report.threshold_policy = policy;
  report.accuracy = classification_accuracy(records, policy);
  report.auroc_by_source[score_source] = report.auroc;

  const bool pixels = !records.empty() &&
                      std::all_of(records.begin(), records.end(), [](const auto& r) { return r.has_pixels(); });
  if (pixels) report.pixel_auroc = pixel_auroc(records, pooling);

  std::set<int> ids;
  for (const auto& r : records) ids.insert(r.class_id);
  std::vector<ScoreRecord> normals;
  for (const auto& r : records) {
    if (r.label == 0) normals.push_back(r);
  }
  for (int id : ids) {
    ClassBreakdown c;
    c.class_id = id;
    c.name = (id >= 0 && id < static_cast<int>(class_names.size())) ? class_names[id] : std::to_string(id);
    std::vector<ScoreRecord> members;
    double sum = 0.0;
    for (const auto& r : records) {
      if (r.class_id != id) continue;
      members.push_back(r);
      sum += r.score;
      c.label = r.label;
    }
    c.n = members.size();
    c.mean_score = sum / static_cast<double>(c.n);
    if (c.label == 1 && !normals.empty()) {
      auto pool = normals;
      pool.insert(pool.end(), members.begin(), members.end());
      c.auroc_vs_normal = auroc(pool);
    }
    report.per_class.push_back(std::move(c));
  }
  return report;
}

void write_scores_csv(const std::filesystem::path& path, const std::vector<ScoreRecord>& records) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out.precision(17);
  out << "sample_id,label,score\n";
  for (const auto& r : records) out << r.sample_id << ',' << r.label << ',' << r.score << '\n';
}

void write_roc_csv(const std::filesystem::path& path, const std::vector<RocPoint>& points) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out.precision(17);
  out << "threshold,fpr,tpr\n";
  for (const auto& p : points) out << p.threshold << ',' << p.fpr << ',' << p.tpr << '\n';
}

void write_roc_png(const std::filesystem::path& path, const std::vector<RocPoint>& points, int size) {
  const int margin = 16;
  const int span = size - 2 * margin;
  cv::Mat canvas(size, size, CV_8UC3, cv::Scalar(255, 255, 255));
  auto to_px = [&](double fpr, double tpr) {
    return cv::Point(margin + static_cast<int>(std::lround(fpr * span)),
                     size - margin - static_cast<int>(std::lround(tpr * span)));
  };
  cv::rectangle(canvas, to_px(0, 0), to_px(1, 1), cv::Scalar(0, 0, 0), 1);
  cv::line(canvas, to_px(0, 0), to_px(1, 1), cv::Scalar(180, 180, 180), 1);
  for (std::size_t i = 1; i < points.size(); ++i) {
    cv::line(canvas, to_px(points[i - 1].fpr, points[i - 1].tpr), to_px(points[i].fpr, points[i].tpr),
             cv::Scalar(200, 60, 20), 2);
  }
  if (!cv::imwrite(path.string(), canvas)) throw DataError("cannot write " + path.string());
}

}  // namespace attnad::metrics
