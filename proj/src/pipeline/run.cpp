#include "attnad/pipeline/run.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "attnad/adgan/trainer.hpp"
#include "attnad/attention/trainer.hpp"
#include "attnad/common/errors.hpp"
#include "attnad/common/rng.hpp"
#include "attnad/common/tensor_util.hpp"
#include "attnad/data/image_io.hpp"
#include "attnad/data/manifest.hpp"
#include "attnad/data/shapes.hpp"
#include "attnad/pipeline/checkpoint.hpp"

#ifndef ATTNAD_VERSION
#define ATTNAD_VERSION "0.0.0"
#endif

namespace attnad::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kCheckpointFormat = "attnad-checkpoint";
constexpr int kCheckpointVersion = 1;

std::string now_iso() {
  const auto now = std::chrono::system_clock::now();
  const auto t = std::chrono::system_clock::to_time_t(now);
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%S") << '.' << std::setw(3) << std::setfill('0') << ms << 'Z';
  return os.str();
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

class Clock {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

// Loss CSV that can be rewound to a step when a run resumes.
class LossLog {
 public:
  LossLog(const fs::path& path, const std::string& header, std::int64_t resume_step) {
    fs::create_directories(path.parent_path());
    std::vector<std::string> keep;
    if (resume_step > 0 && fs::exists(path)) {
      std::ifstream in(path);
      std::string line;
      std::getline(in, line);
      while (std::getline(in, line)) {
        if (!line.empty() && std::stoll(line.substr(0, line.find(','))) < resume_step) keep.push_back(line);
      }
    }
    out_.open(path, std::ios::trunc);
    if (!out_) throw Error("cannot write '" + path.string() + "'");
    out_ << header << '\n';
    for (const auto& l : keep) out_ << l << '\n';
  }

  void row(std::int64_t step, std::initializer_list<double> values) {
    out_ << step;
    char buf[32];
    for (double v : values) {
      std::snprintf(buf, sizeof(buf), ",%.9g", v);
      out_ << buf;
    }
    out_ << '\n';
    out_.flush();
  }

 private:
  std::ofstream out_;
};

struct RunContext {
  const RunConfig& cfg;
  const RunOptions& opts;
  fs::path dir;
  RunManifest manifest;
  std::int64_t executed = 0;

  fs::path ckpt(const std::string& name) const { return dir / "checkpoints" / (name + ".ckpt"); }
  fs::path manifest_path() const { return dir / "run_manifest.json"; }

  void event(const std::string& name, std::int64_t step = -1) {
    const std::int64_t seq = manifest.events.empty() ? 0 : manifest.events.back().seq + 1;
    manifest.events.push_back({name, now_iso(), seq, step});
    write_run_manifest(manifest_path(), manifest);
  }

  json meta(int stage, std::int64_t next_step, const std::string& kind) const {
    return {{"format", kCheckpointFormat}, {"version", kCheckpointVersion}, {"stage", stage},
            {"next_step", next_step},      {"kind", kind},                   {"config", to_json(cfg)},
            {"code_version", version_fingerprint()}};
  }

  bool should_stop() const { return opts.stop_after_steps >= 0 && executed >= opts.stop_after_steps; }

  [[noreturn]] void diverged(const std::string& stage, std::int64_t step, const std::string& path,
                             const std::string& message) {
    manifest.status = "diverged";
    manifest.divergence = DivergenceInfo{stage, step, path, message};
    event(stage + "_diverged", step);
    throw TrainingDivergence(message, path);
  }
};

std::int64_t checkpoint_step(const fs::path& path, int stage) {
  auto loaded = load_checkpoint(path);
  if (loaded.meta.value("format", "") != kCheckpointFormat || loaded.meta.value("stage", 0) != stage) {
    throw DataError("'" + path.string() + "' is not a stage-" + std::to_string(stage) + " checkpoint");
  }
  return loaded.meta.at("next_step").get<std::int64_t>();
}

void check_resume_config(const fs::path& path, const RunConfig& cfg) {
  auto loaded = load_checkpoint(path);
  if (run_config_from_json(loaded.meta.at("config")) != cfg) {
    throw ConfigError("cannot resume: config differs from the one stored in '" + path.string() + "'");
  }
}

torch::Tensor take_batch(const torch::Tensor& images, const StageSchedule& s, std::int64_t step) {
  const auto idx = batch_indices(images.size(0), s.batch_size, derive_seed(s.seed, static_cast<std::uint64_t>(step)));
  return images.index_select(0, torch::tensor(idx, torch::kLong));
}

// Returns false when the run was interrupted.
bool train_stage1(RunContext& ctx, attention::AttentionTrainer& trainer, const torch::Tensor& train_images) {
  const auto& s = ctx.cfg.stage1;
  const auto final_path = ctx.ckpt("stage1_final");
  const auto last_path = ctx.ckpt("stage1_last");
  auto save = [&](const fs::path& p, std::int64_t next, const std::string& kind) {
    save_checkpoint(p, ctx.meta(1, next, kind), [&](torch::serialize::OutputArchive& a) { trainer.save(a); });
  };

  if (ctx.opts.resume && fs::exists(final_path)) {
    check_resume_config(final_path, ctx.cfg);
    auto loaded = load_checkpoint(final_path);
    trainer.load(loaded.archive);
    return true;
  }
  std::int64_t start = 0;
  if (ctx.opts.resume && fs::exists(last_path)) {
    check_resume_config(last_path, ctx.cfg);
    start = checkpoint_step(last_path, 1);
    auto loaded = load_checkpoint(last_path);
    trainer.load(loaded.archive);
  }

  LossLog log(ctx.dir / "logs" / "stage1_losses.csv",
              "step,l_adv,l_adv_ano,l_g_rec,l_g_kl,l_att,total,d_adv,d_adv_ano,d_total", start);
  Clock clock;
  ctx.event("stage1_start", start);
  for (std::int64_t step = start; step < s.steps; ++step) {
    if (ctx.should_stop()) {
      ctx.manifest.status = "interrupted";
      ctx.event("interrupted", step);
      return false;
    }
    attention::LossBundle b;
    try {
      b = trainer.step(take_batch(train_images, s, step), step);
    } catch (const TrainingDivergence& e) {
      const auto diag = ctx.ckpt("stage1_diverged_step" + std::to_string(step));
      save(diag, step, "diagnostic");
      ctx.diverged("stage1", step, diag.string(), e.what());
    }
    ++ctx.executed;
    if (step % s.log_every == 0 || step + 1 == s.steps) {
      log.row(step, {b.l_adv, b.l_adv_ano, b.l_g_rec, b.l_g_kl, b.l_att, b.total, b.d_adv, b.d_adv_ano, b.d_total});
      if (ctx.opts.verbose) {
        std::fprintf(stderr, "[stage1] step %lld/%lld total %.4f att %.4f d %.4f\n", static_cast<long long>(step + 1),
                     static_cast<long long>(s.steps), b.total, b.l_att, b.d_total);
      }
    }
    if ((step + 1) % s.checkpoint_every == 0 && step + 1 < s.steps) save(last_path, step + 1, "periodic");
  }
  save(final_path, s.steps, "final");
  ctx.manifest.checkpoints["stage1"] = final_path.string();
  ctx.manifest.wall_clock_seconds["stage1"] += clock.seconds();
  ctx.event("stage1_checkpoint", s.steps);
  return true;
}

bool train_stage2(RunContext& ctx, adgan::AdganTrainer& trainer, const torch::Tensor& train_images) {
  const auto& s = ctx.cfg.stage2;
  const auto final_path = ctx.ckpt("stage2_final");
  const auto last_path = ctx.ckpt("stage2_last");
  auto save = [&](const fs::path& p, std::int64_t next, const std::string& kind) {
    save_checkpoint(p, ctx.meta(2, next, kind), [&](torch::serialize::OutputArchive& a) { trainer.save(a); });
  };

  if (ctx.opts.resume && fs::exists(final_path)) {
    check_resume_config(final_path, ctx.cfg);
    auto loaded = load_checkpoint(final_path);
    trainer.load(loaded.archive);
    return true;
  }
  std::int64_t start = 0;
  if (ctx.opts.resume && fs::exists(last_path)) {
    check_resume_config(last_path, ctx.cfg);
    start = checkpoint_step(last_path, 2);
    auto loaded = load_checkpoint(last_path);
    trainer.load(loaded.archive);
  }

  LossLog log(ctx.dir / "logs" / "stage2_losses.csv", "step,d_real,d_fake,d_anomaly,d_total,g_adv,g_rec,g_total",
              start);
  Clock clock;
  ctx.event("stage2_start", start);
  for (std::int64_t step = start; step < s.steps; ++step) {
    if (ctx.should_stop()) {
      ctx.manifest.status = "interrupted";
      ctx.event("interrupted", step);
      return false;
    }
    adgan::AdganLossBundle b;
    try {
      b = trainer.step(take_batch(train_images, s, step), step);
    } catch (const TrainingDivergence& e) {
      const auto diag = ctx.ckpt("stage2_diverged_step" + std::to_string(step));
      save(diag, step, "diagnostic");
      ctx.diverged("stage2", step, diag.string(), e.what());
    }
    ++ctx.executed;
    if (step % s.log_every == 0 || step + 1 == s.steps) {
      log.row(step, {b.d_real, b.d_fake, b.d_anomaly, b.d_total, b.g_adv, b.g_rec, b.g_total});
      if (ctx.opts.verbose) {
        std::fprintf(stderr, "[stage2] step %lld/%lld d %.4f g %.4f rec %.4f\n", static_cast<long long>(step + 1),
                     static_cast<long long>(s.steps), b.d_total, b.g_total, b.g_rec);
      }
    }
    if ((step + 1) % s.checkpoint_every == 0 && step + 1 < s.steps) save(last_path, step + 1, "periodic");
  }
  save(final_path, s.steps, "final");
  ctx.manifest.checkpoints["stage2"] = final_path.string();
  ctx.manifest.wall_clock_seconds["stage2"] += clock.seconds();
  ctx.event("stage2_checkpoint", s.steps);
  return true;
}

std::string sanitize(const std::string& id) {
  std::string out;
  for (char c : id) out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '.') ? c : '_';
  return out;
}

}  // namespace

std::string version_fingerprint() { return std::string("attnad ") + ATTNAD_VERSION + " / torch " + TORCH_VERSION; }

// --- manifest --------------------------------------------------------------

json RunManifest::to_json() const {
  json events_j = json::array();
  for (const auto& e : events) {
    events_j.push_back({{"name", e.name}, {"wall_time", e.wall_time}, {"seq", e.seq}, {"step", e.step}});
  }
  json j{{"config", config},
         {"version", version},
         {"status", status},
         {"checkpoints", checkpoints},
         {"outputs", outputs},
         {"events", events_j},
         {"wall_clock_seconds", wall_clock_seconds},
         {"stage1_hash_before_stage2", stage1_hash_before_stage2},
         {"stage1_hash_after_stage2", stage1_hash_after_stage2},
         {"metrics", metrics}};
  if (divergence) {
    j["divergence"] = {{"stage", divergence->stage},
                       {"step", divergence->step},
                       {"checkpoint", divergence->checkpoint},
                       {"message", divergence->message}};
  }
  return j;
}

RunManifest RunManifest::from_json(const json& j) {
  RunManifest m;
  m.config = j.at("config");
  m.version = j.value("version", "");
  m.status = j.value("status", "ok");
  m.checkpoints = j.value("checkpoints", std::map<std::string, std::string>{});
  m.outputs = j.value("outputs", std::map<std::string, std::string>{});
  for (const auto& e : j.value("events", json::array())) {
    m.events.push_back({e.at("name"), e.at("wall_time"), e.at("seq"), e.value("step", std::int64_t{-1})});
  }
  m.wall_clock_seconds = j.value("wall_clock_seconds", std::map<std::string, double>{});
  m.stage1_hash_before_stage2 = j.value("stage1_hash_before_stage2", "");
  m.stage1_hash_after_stage2 = j.value("stage1_hash_after_stage2", "");
  if (j.contains("divergence")) {
    const auto& d = j.at("divergence");
    m.divergence = DivergenceInfo{d.at("stage"), d.at("step"), d.at("checkpoint"), d.at("message")};
  }
  m.metrics = j.value("metrics", json::object());
  return m;
}

const RunEvent* RunManifest::find_event(const std::string& name) const {
  for (const auto& e : events) {
    if (e.name == name) return &e;
  }
  return nullptr;
}

RunManifest read_run_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open run manifest '" + path.string() + "'");
  try {
    return RunManifest::from_json(json::parse(in));
  } catch (const json::exception& e) {
    throw DataError("run manifest '" + path.string() + "': " + e.what());
  }
}

void write_run_manifest(const fs::path& path, const RunManifest& m) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const auto tmp = fs::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out << m.to_json().dump(2) << '\n';
  }
  fs::rename(tmp, path);
}

// --- data ------------------------------------------------------------------

data::SplitDataset load_dataset(const DatasetRef& ref) {
  switch (ref.kind) {
    case DatasetRef::Kind::shapes:
      return data::generate_shapes_dataset(ref.shapes);
    case DatasetRef::Kind::defect_tree:
      return data::load_defect_tree(ref.path, ref.image_size, ref.channels);
    case DatasetRef::Kind::manifest: {
      auto m = data::read_manifest(ref.path);
      m.image_size = ref.image_size;
      m.channels = ref.channels;
      const fs::path root = ref.root.empty() ? fs::path(ref.path).parent_path() : fs::path(ref.root);
      return data::load_multiclass_archive(root, m);
    }
  }
  throw ConfigError("unknown dataset kind");
}

std::vector<std::int64_t> batch_indices(std::int64_t n, std::int64_t batch_size, std::uint64_t seed) {
  if (n < 1 || batch_size < 1) throw ConfigError("batch_indices: empty dataset or batch");
  Rng rng(seed);
  std::vector<std::int64_t> pool(static_cast<std::size_t>(n));
  std::vector<std::int64_t> out;
  out.reserve(static_cast<std::size_t>(batch_size));
  // Partial Fisher-Yates per pass; passes repeat when the batch exceeds n.
  while (static_cast<std::int64_t>(out.size()) < batch_size) {
    for (std::int64_t i = 0; i < n; ++i) pool[static_cast<std::size_t>(i)] = i;
    const std::int64_t take = std::min<std::int64_t>(n, batch_size - static_cast<std::int64_t>(out.size()));
    for (std::int64_t i = 0; i < take; ++i) {
      const auto j = i + static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(n - i)));
      std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
      out.push_back(pool[static_cast<std::size_t>(i)]);
    }
  }
  return out;
}

// --- evaluation ------------------------------------------------------------

ScoredTestSet score_test_set(attention::AttentionGenerator& gen, attention::Discriminator& disc,
                             adgan::Adgan* adgan_model, const metrics::OneClassSplit& split,
                             std::int64_t batch_size) {
  const auto& x = split.test.images;
  if (!x.defined() || x.size(0) == 0) throw DataError("test split is empty");
  check_image_batch(x, "test images", true);
  const auto first_conv = gen->encoder()->parameters().front();
  if (first_conv.size(1) != x.size(1)) {
    throw ShapeError("checkpoint expects " + std::to_string(first_conv.size(1)) + "-channel images, dataset has " +
                     std::to_string(x.size(1)));
  }

  ScoredTestSet out;
  torch::Tensor recon_err, disc_score;
  {
    auto pred = attention::predict(gen, x, batch_size);
    out.attention = pred.attn;
    recon_err = (x - pred.recon).pow(2).mean({1, 2, 3}).to(torch::kFloat64);

    torch::NoGradGuard no_grad;
    const bool was_training = disc->is_training();
    disc->eval();
    std::vector<torch::Tensor> parts;
    for (std::int64_t i = 0; i < x.size(0); i += batch_size) {
      const auto len = std::min(batch_size, x.size(0) - i);
      parts.push_back(1.0 - torch::sigmoid(attention::discriminator_logits(disc, x.narrow(0, i, len),
                                                                          pred.attn.narrow(0, i, len))));
    }
    disc->train(was_training);
    disc_score = torch::cat(parts).to(torch::kFloat64);
  }
  if (out.attention.size(2) != x.size(2) || out.attention.size(3) != x.size(3)) {
    throw ShapeError("attention map size does not match the test images");
  }

  std::map<std::string, torch::Tensor> scores{{"recon_loss", recon_err}, {"attn_discriminator", disc_score}};
  if (adgan_model) scores["adgan"] = adgan::anomaly_score(x, gen, *adgan_model, batch_size).to(torch::kFloat64);

  const bool masks = split.test.has_masks();
  const auto h = x.size(2), w = x.size(3);
  std::vector<metrics::ScoreRecord> base(static_cast<std::size_t>(x.size(0)));
  const auto attn = out.attention.contiguous();
  const auto mask = masks ? split.test.masks.contiguous() : torch::Tensor();
  for (std::int64_t i = 0; i < x.size(0); ++i) {
    auto& r = base[static_cast<std::size_t>(i)];
    r.sample_id = split.test.ids.at(static_cast<std::size_t>(i));
    r.label = split.anomaly_labels.at(static_cast<std::size_t>(i));
    r.class_id = split.test.labels.at(static_cast<std::size_t>(i));
    if (masks) {
      r.height = h;
      r.width = w;
      const auto a = attn[i][0].flatten();
      r.pixel_scores = metrics::attention_to_pixel_scores(std::span<const float>(a.data_ptr<float>(), a.numel()));
      const auto m = (mask[i][0].flatten() < 0.5).to(torch::kUInt8).contiguous();
      r.pixel_labels.assign(m.data_ptr<std::uint8_t>(), m.data_ptr<std::uint8_t>() + m.numel());
    }
  }
  for (const auto& [name, s] : scores) {
    auto recs = base;
    const auto acc = s.contiguous();
    for (std::size_t i = 0; i < recs.size(); ++i) recs[i].score = acc[static_cast<std::int64_t>(i)].item<double>();
    out.by_source[name] = std::move(recs);
  }
  return out;
}

json report_settings(const RunConfig& cfg) {
  const auto eff = cfg.effective_attention();
  return {{"dataset", to_string(cfg.dataset.kind)},
          {"normal_class", cfg.normal_class},
          {"image_size", cfg.attention.image_size},
          {"stage1", {{"steps", cfg.stage1.steps}, {"batch_size", cfg.stage1.batch_size}, {"seed", cfg.stage1.seed}}},
          {"stage2",
           {{"steps", cfg.runs_stage2() ? cfg.stage2.steps : 0},
            {"batch_size", cfg.stage2.batch_size},
            {"seed", cfg.stage2.seed}}},
          {"augmentation_seed", cfg.augmentation.seed},
          {"synthesize_anomalies", cfg.ablation.synthesize_anomalies},
          {"effective_weights",
           {{"adv", eff.weights.adv},
            {"adv_ano", eff.weights.adv_ano},
            {"rec", eff.weights.rec},
            {"kl", eff.weights.kl},
            {"att", eff.weights.att}}},
          {"lambda_anomaly_fake", cfg.effective_adgan().lambda_anomaly_fake},
          {"early_stopping", false}};
}

std::map<std::string, std::string> write_evaluation(const ScoredTestSet& scored, const metrics::OneClassSplit& split,
                                                    const RunConfig& cfg, const fs::path& out_dir,
                                                    metrics::EvalReport* report_out) {
  const auto primary = to_string(cfg.ablation.score);
  const auto it = scored.by_source.find(primary);
  if (it == scored.by_source.end()) throw Error("score source '" + primary + "' was not computed");
  const auto& records = it->second;

  auto report = metrics::build_report(records, split.test.class_names, primary, cfg.eval.threshold,
                                      cfg.eval.pixel_pooling);
  for (const auto& [name, recs] : scored.by_source) {
    try {
      report.auroc_by_source[name] = metrics::auroc(recs);
    } catch (const UndefinedMetric&) {
    }
  }
  report.settings = report_settings(cfg);

  fs::create_directories(out_dir);
  std::map<std::string, std::string> paths;
  paths["report"] = (out_dir / "report.json").string();
  {
    std::ofstream out(paths["report"], std::ios::trunc);
    out << report.to_json().dump(2) << '\n';
  }
  paths["scores"] = (out_dir / "scores.csv").string();
  metrics::write_scores_csv(paths["scores"], records);
  const auto roc = metrics::roc_curve(records);
  paths["roc_csv"] = (out_dir / "roc.csv").string();
  metrics::write_roc_csv(paths["roc_csv"], roc);
  paths["roc_png"] = (out_dir / "roc.png").string();
  metrics::write_roc_png(paths["roc_png"], roc);

  if (cfg.eval.write_overlays) {
    const auto dir = out_dir / "overlays";
    fs::remove_all(dir);
    fs::create_directories(dir);
    paths["overlays"] = dir.string();
    const auto& x = split.test.images;
    char prefix[32];
    for (std::int64_t i = 0; i < x.size(0); ++i) {
      if (split.anomaly_labels[static_cast<std::size_t>(i)] != 1) continue;
      std::vector<torch::Tensor> panels{x[i], scored.attention[i]};
      if (split.test.has_masks()) panels.push_back(split.test.masks[i]);
      std::snprintf(prefix, sizeof(prefix), "%05lld_", static_cast<long long>(i));
      data::save_png(dir / (prefix + sanitize(fs::path(split.test.ids[static_cast<std::size_t>(i)]).replace_extension().string()) + ".png"),
                     data::hstack_panels(panels));
    }
  }
  if (report_out) *report_out = std::move(report);
  return paths;
}

// --- orchestration -----------------------------------------------------------

RunManifest run_two_stage(const RunConfig& cfg, const RunOptions& options) {
  cfg.validate();
  torch::set_num_threads(cfg.threads);

  RunContext ctx{cfg, options, fs::path(cfg.output_dir), {}, 0};
  fs::create_directories(ctx.dir);
  if (options.resume && fs::exists(ctx.manifest_path())) {
    ctx.manifest = read_run_manifest(ctx.manifest_path());
    ctx.manifest.status = "ok";
    ctx.manifest.divergence.reset();
  } else {
    fs::remove_all(ctx.dir / "checkpoints");
    fs::remove_all(ctx.dir / "logs");
  }
  ctx.manifest.config = to_json(cfg);
  ctx.manifest.version = version_fingerprint();
  save_run_config(ctx.dir / "config.json", cfg);
  ctx.event(options.resume ? "resume" : "start");

  const auto split = metrics::one_class_protocol(load_dataset(cfg.dataset), cfg.normal_class);
  const auto& train_images = split.train.images;
  check_image_batch(train_images, "training images", true);
  if (train_images.size(1) != cfg.attention.channels || train_images.size(2) != cfg.attention.image_size) {
    throw ShapeError("dataset images do not match attention.channels/image_size");
  }

  attention::AttentionTrainer stage1(cfg.effective_attention(), cfg.augmentation, cfg.stage1.seed,
                                     cfg.ablation.synthesize_anomalies);
  if (!train_stage1(ctx, stage1, train_images)) return ctx.manifest;
  ctx.manifest.checkpoints["stage1"] = ctx.ckpt("stage1_final").string();

  std::optional<adgan::AdganTrainer> stage2;
  if (cfg.runs_stage2()) {
    const auto before = module_hash(*stage1.generator());
    stage2.emplace(cfg.effective_adgan(), stage1.generator(), cfg.attention.channels, cfg.attention.image_size,
                   cfg.augmentation, cfg.stage2.seed);
    if (!train_stage2(ctx, *stage2, train_images)) return ctx.manifest;
    ctx.manifest.checkpoints["stage2"] = ctx.ckpt("stage2_final").string();
    const auto after = module_hash(*stage1.generator());
    ctx.manifest.stage1_hash_before_stage2 = hex64(before);
    ctx.manifest.stage1_hash_after_stage2 = hex64(after);
    if (before != after) throw Error("stage-1 weights changed during stage 2");
  }

  Clock clock;
  auto scored = score_test_set(stage1.generator(), stage1.discriminator(), stage2 ? &stage2->model() : nullptr, split,
                               cfg.eval.batch_size);
  metrics::EvalReport report;
  ctx.manifest.outputs = write_evaluation(scored, split, cfg, ctx.dir, &report);
  ctx.manifest.outputs["stage1_log"] = (ctx.dir / "logs" / "stage1_losses.csv").string();
  if (stage2) ctx.manifest.outputs["stage2_log"] = (ctx.dir / "logs" / "stage2_losses.csv").string();
  ctx.manifest.metrics = report.to_json();
  ctx.manifest.wall_clock_seconds["eval"] = clock.seconds();
  ctx.manifest.status = "ok";
  ctx.event("eval_done");
  return ctx.manifest;
}

metrics::EvalReport evaluate_run(const fs::path& manifest_path, const fs::path& out_dir) {
  const auto manifest = read_run_manifest(manifest_path);
  if (manifest.status != "ok") throw DataError("run '" + manifest_path.string() + "' did not finish");
  const auto cfg = run_config_from_json(manifest.config);
  torch::set_num_threads(cfg.threads);
  const auto split = metrics::one_class_protocol(load_dataset(cfg.dataset), cfg.normal_class);

  attention::AttentionTrainer stage1(cfg.effective_attention(), cfg.augmentation, cfg.stage1.seed,
                                     cfg.ablation.synthesize_anomalies);
  {
    auto loaded = load_checkpoint(manifest.checkpoints.at("stage1"));
    stage1.load(loaded.archive);
  }
  std::optional<adgan::AdganTrainer> stage2;
  if (cfg.runs_stage2()) {
    stage2.emplace(cfg.effective_adgan(), stage1.generator(), cfg.attention.channels, cfg.attention.image_size,
                   cfg.augmentation, cfg.stage2.seed);
    auto loaded = load_checkpoint(manifest.checkpoints.at("stage2"));
    stage2->load(loaded.archive);
  }
  auto scored = score_test_set(stage1.generator(), stage1.discriminator(), stage2 ? &stage2->model() : nullptr, split,
                               cfg.eval.batch_size);
  metrics::EvalReport report;
  write_evaluation(scored, split, cfg, out_dir.empty() ? manifest_path.parent_path() : out_dir, &report);
  return report;
}

}  // namespace attnad::pipeline
