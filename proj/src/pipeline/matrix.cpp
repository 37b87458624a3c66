#include "attnad/pipeline/matrix.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "attnad/common/errors.hpp"

namespace attnad::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

const std::vector<std::string>& matrix_conditions() {
  static const std::vector<std::string> kConditions{"base", "rotate", "perm", "jitter", "R&P", "R&P&J"};
  return kConditions;
}

const std::vector<std::pair<std::string, double>>& matrix_reference_means() {
  static const std::vector<std::pair<std::string, double>> kRef{
      {"base", 0.583}, {"rotate", 0.612}, {"perm", 0.634}, {"jitter", 0.542},
      {"R&P", 0.647},  {"R&P&J", 0.663},  {"semi", 0.687}};
  return kRef;
}

MatrixConfig matrix_config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("matrix config: expected an object");
  for (const auto& [k, v] : j.items()) {
    if (k != "base" && k != "conditions" && k != "classes") throw ConfigError("matrix config: unknown key '" + k + "'");
  }
  if (!j.contains("base")) throw ConfigError("matrix config: missing 'base' run config");
  MatrixConfig m;
  m.base = run_config_from_json(j.at("base"));
  try {
    m.conditions = j.value("conditions", matrix_conditions());
    m.classes = j.value("classes", std::vector<std::string>{m.base.normal_class});
  } catch (const json::exception& e) {
    throw ConfigError(std::string("matrix config: ") + e.what());
  }
  const auto& known = matrix_conditions();
  std::set<std::string> seen;
  for (const auto& c : m.conditions) {
    if (std::find(known.begin(), known.end(), c) == known.end()) {
      throw ConfigError("matrix config: unknown condition '" + c + "'");
    }
    if (!seen.insert(c).second) throw ConfigError("matrix config: duplicate condition '" + c + "'");
  }
  if (m.conditions.empty() || m.classes.empty()) throw ConfigError("matrix config: empty conditions or classes");
  return m;
}

MatrixConfig load_matrix_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open matrix config '" + path.string() + "'");
  try {
    return matrix_config_from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw ConfigError("matrix config '" + path.string() + "': " + e.what());
  }
}

RunConfig condition_config(const RunConfig& base, const std::string& condition, const std::string& normal_class) {
  RunConfig c = base;
  c.normal_class = normal_class;
  c.output_dir = (fs::path(base.output_dir) / condition / normal_class).string();
  c.ablation.disable_adv_ano = false;
  auto& a = c.augmentation;
  if (condition == "base") {
    c.ablation.synthesize_anomalies = false;
    return c;
  }
  c.ablation.synthesize_anomalies = true;
  a.use_rotate = condition == "rotate" || condition == "R&P" || condition == "R&P&J";
  a.use_perm = condition == "perm" || condition == "R&P" || condition == "R&P&J";
  a.use_jitter = condition == "jitter" || condition == "R&P&J";
  if (!a.any_prime_step()) throw ConfigError("unknown matrix condition '" + condition + "'");
  return c;
}

std::optional<double> MatrixReport::mean(const std::string& condition) const {
  const auto it = auroc.find(condition);
  if (it == auroc.end() || it->second.empty()) return std::nullopt;
  double s = 0.0;
  for (const auto& [cls, v] : it->second) s += v;
  return s / static_cast<double>(it->second.size());
}

json MatrixReport::to_json() const {
  json rows = json::array();
  for (const auto& cond : conditions) {
    json row{{"condition", cond}};
    json per = json::object();
    if (const auto it = auroc.find(cond); it != auroc.end()) {
      for (const auto& [cls, v] : it->second) per[cls] = v;
    }
    row["auroc"] = per;
    const auto m = mean(cond);
    row["mean"] = m ? json(*m) : json(nullptr);
    rows.push_back(row);
  }
  json ref = json::object();
  for (const auto& [name, v] : matrix_reference_means()) ref[name] = v;
  return {{"conditions", conditions}, {"classes", classes}, {"score_source", score_source},
          {"rows", rows},             {"reference_cifar10_mean", ref}};
}

std::string MatrixReport::to_markdown() const {
  std::ostringstream os;
  char buf[32];
  auto fmt = [&](std::optional<double> v) {
    if (!v) return std::string("n/a");
    std::snprintf(buf, sizeof(buf), "%.3f", *v);
    return std::string(buf);
  };
  os << "| Method |";
  for (const auto& c : classes) os << ' ' << c << " |";
  os << " mean |\n|---|";
  for (std::size_t i = 0; i < classes.size(); ++i) os << "---|";
  os << "---|\n";
  for (const auto& cond : conditions) {
    os << "| " << cond << " |";
    const auto it = auroc.find(cond);
    for (const auto& cls : classes) {
      std::optional<double> v;
      if (it != auroc.end()) {
        if (const auto jt = it->second.find(cls); jt != it->second.end()) v = jt->second;
      }
      os << ' ' << fmt(v) << " |";
    }
    os << ' ' << fmt(mean(cond)) << " |\n";
  }
  os << "\nDetection AUROC, score source: " << score_source << ".\n\n";
  os << "Reference mean AUROC over all ten CIFAR-10 classes:";
  for (const auto& [name, v] : matrix_reference_means()) os << ' ' << name << ' ' << fmt(v) << ';';
  os.seekp(-1, std::ios::cur);
  os << ".\n";
  return os.str();
}

MatrixReport run_augmentation_matrix(const MatrixConfig& cfg, const RunOptions& options) {
  MatrixReport report;
  report.conditions = cfg.conditions;
  report.classes = cfg.classes;
  report.score_source = to_string(cfg.base.ablation.score);
  const fs::path root(cfg.base.output_dir);
  fs::create_directories(root);
  for (const auto& cond : cfg.conditions) {
    for (const auto& cls : cfg.classes) {
      const auto run_cfg = condition_config(cfg.base, cond, cls);
      const auto manifest = run_two_stage(run_cfg, options);
      if (manifest.status == "ok" && manifest.metrics.contains("auroc")) {
        report.auroc[cond][cls] = manifest.metrics.at("auroc").get<double>();
      }
    }
  }
  {
    std::ofstream out(root / "matrix.json", std::ios::trunc);
    out << report.to_json().dump(2) << '\n';
  }
  std::ofstream md(root / "matrix.md", std::ios::trunc);
  md << report.to_markdown();
  return report;
}

}  // namespace attnad::pipeline
