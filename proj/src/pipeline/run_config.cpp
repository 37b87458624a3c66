#include "attnad/pipeline/run_config.hpp"

#include <fstream>
#include <set>

#include "attnad/common/errors.hpp"

namespace attnad::pipeline {

using nlohmann::json;

namespace {

// Reads an object while recording which keys were consumed, so that typos
// in config files fail loudly instead of silently falling back to defaults.
class Obj {
 public:
  Obj(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ConfigError(where_ + ": expected an object");
  }

  template <class T>
  void opt(const char* key, T& out) {
    seen_.insert(key);
    if (j_.contains(key)) get(key, out);
  }

  template <class T>
  void req(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) throw ConfigError(where_ + ": missing required key '" + key + "'");
    get(key, out);
  }

  const json* sub(const char* key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  std::string path(const char* key) const { return where_ + "." + key; }

  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!seen_.count(k)) throw ConfigError(where_ + ": unknown key '" + k + "'");
    }
  }

 private:
  template <class T>
  void get(const char* key, T& out) {
    try {
      if constexpr (std::is_same_v<T, synth::Interval>) {
        const auto& a = j_.at(key);
        if (!a.is_array() || a.size() != 2) throw ConfigError(path(key) + ": expected [lo, hi]");
        out = {a[0].get<double>(), a[1].get<double>()};
      } else {
        out = j_.at(key).get<T>();
      }
    } catch (const json::exception& e) {
      throw ConfigError(path(key) + ": " + e.what());
    }
  }

  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

json iv(const synth::Interval& i) { return json::array({i.lo, i.hi}); }

json to_json(const attention::EncoderConfig& c) {
  return {{"base_width", c.base_width}, {"blocks", c.blocks}, {"pretrained_weights", c.pretrained_weights}};
}

attention::EncoderConfig encoder_from_json(const json& j, const std::string& where) {
  attention::EncoderConfig c;
  Obj o(j, where);
  o.opt("base_width", c.base_width);
  o.opt("blocks", c.blocks);
  o.opt("pretrained_weights", c.pretrained_weights);
  o.finish();
  return c;
}

json to_json(const attention::AttentionNetConfig& c) {
  return {{"image_size", c.image_size},
          {"channels", c.channels},
          {"latent_dim", c.latent_dim},
          {"encoder", to_json(c.encoder)},
          {"decoder_width", c.decoder_width},
          {"disc_base_width", c.disc_base_width},
          {"weights",
           {{"adv", c.weights.adv},
            {"adv_ano", c.weights.adv_ano},
            {"rec", c.weights.rec},
            {"kl", c.weights.kl},
            {"att", c.weights.att}}},
          {"lr", c.lr},
          {"beta1", c.beta1},
          {"beta2", c.beta2}};
}

attention::AttentionNetConfig attention_from_json(const json& j) {
  attention::AttentionNetConfig c;
  Obj o(j, "attention");
  o.opt("image_size", c.image_size);
  o.opt("channels", c.channels);
  o.opt("latent_dim", c.latent_dim);
  if (const auto* e = o.sub("encoder")) c.encoder = encoder_from_json(*e, "attention.encoder");
  o.opt("decoder_width", c.decoder_width);
  o.opt("disc_base_width", c.disc_base_width);
  if (const auto* w = o.sub("weights")) {
    Obj ow(*w, "attention.weights");
    ow.opt("adv", c.weights.adv);
    ow.opt("adv_ano", c.weights.adv_ano);
    ow.opt("rec", c.weights.rec);
    ow.opt("kl", c.weights.kl);
    ow.opt("att", c.weights.att);
    ow.finish();
  }
  o.opt("lr", c.lr);
  o.opt("beta1", c.beta1);
  o.opt("beta2", c.beta2);
  o.finish();
  return c;
}

json to_json(const adgan::AdganConfig& c) {
  return {{"feature_channels", c.feature_channels},
          {"encoder", to_json(c.encoder)},
          {"latent_dim", c.latent_dim},
          {"decoder_width", c.decoder_width},
          {"disc_base_width", c.disc_base_width},
          {"lambda_adv", c.lambda_adv},
          {"lambda_rec", c.lambda_rec},
          {"lambda_anomaly_fake", c.lambda_anomaly_fake},
          {"lr", c.lr},
          {"beta1", c.beta1},
          {"beta2", c.beta2}};
}

adgan::AdganConfig adgan_from_json(const json& j) {
  adgan::AdganConfig c;
  Obj o(j, "adgan");
  o.opt("feature_channels", c.feature_channels);
  if (const auto* e = o.sub("encoder")) c.encoder = encoder_from_json(*e, "adgan.encoder");
  o.opt("latent_dim", c.latent_dim);
  o.opt("decoder_width", c.decoder_width);
  o.opt("disc_base_width", c.disc_base_width);
  o.opt("lambda_adv", c.lambda_adv);
  o.opt("lambda_rec", c.lambda_rec);
  o.opt("lambda_anomaly_fake", c.lambda_anomaly_fake);
  o.opt("lr", c.lr);
  o.opt("beta1", c.beta1);
  o.opt("beta2", c.beta2);
  o.finish();
  return c;
}

json to_json(const StageSchedule& s) {
  return {{"steps", s.steps},
          {"batch_size", s.batch_size},
          {"seed", s.seed},
          {"checkpoint_every", s.checkpoint_every},
          {"log_every", s.log_every}};
}

StageSchedule stage_from_json(const json& j, const std::string& where) {
  StageSchedule s;
  Obj o(j, where);
  o.opt("steps", s.steps);
  o.opt("batch_size", s.batch_size);
  o.req("seed", s.seed);
  o.opt("checkpoint_every", s.checkpoint_every);
  o.opt("log_every", s.log_every);
  o.finish();
  return s;
}

DatasetRef::Kind dataset_kind_from_string(const std::string& s) {
  if (s == "shapes") return DatasetRef::Kind::shapes;
  if (s == "manifest") return DatasetRef::Kind::manifest;
  if (s == "defect_tree") return DatasetRef::Kind::defect_tree;
  throw ConfigError("dataset.kind: unknown value '" + s + "'");
}

}  // namespace

std::string to_string(ScoreSource s) {
  switch (s) {
    case ScoreSource::adgan: return "adgan";
    case ScoreSource::recon_loss: return "recon_loss";
    case ScoreSource::attn_discriminator: return "attn_discriminator";
  }
  return "?";
}

ScoreSource score_source_from_string(const std::string& s) {
  if (s == "adgan" || s == "none") return ScoreSource::adgan;
  if (s == "recon_loss") return ScoreSource::recon_loss;
  if (s == "attn_discriminator") return ScoreSource::attn_discriminator;
  throw ConfigError("unknown score source '" + s + "'");
}

std::string to_string(DatasetRef::Kind k) {
  switch (k) {
    case DatasetRef::Kind::shapes: return "shapes";
    case DatasetRef::Kind::manifest: return "manifest";
    case DatasetRef::Kind::defect_tree: return "defect_tree";
  }
  return "?";
}

json to_json(const synth::AugmentationConfig& c) {
  return {{"rotation_angles", c.rotation_angles},
          {"perm_grid", c.perm_grid},
          {"jitter",
           {{"brightness", iv(c.jitter.brightness)},
            {"contrast", iv(c.jitter.contrast)},
            {"saturation", iv(c.jitter.saturation)}}},
          {"cut_area_frac", iv(c.cut_area_frac)},
          {"cut_aspect", iv(c.cut_aspect)},
          {"cut_fill_zero_prob", c.cut_fill_zero_prob},
          {"use_rotate", c.use_rotate},
          {"use_perm", c.use_perm},
          {"use_jitter", c.use_jitter},
          {"seed", c.seed}};
}

synth::AugmentationConfig augmentation_from_json(const json& j) {
  synth::AugmentationConfig c;
  Obj o(j, "augmentation");
  o.opt("rotation_angles", c.rotation_angles);
  o.opt("perm_grid", c.perm_grid);
  if (const auto* jj = o.sub("jitter")) {
    Obj oj(*jj, "augmentation.jitter");
    oj.opt("brightness", c.jitter.brightness);
    oj.opt("contrast", c.jitter.contrast);
    oj.opt("saturation", c.jitter.saturation);
    oj.finish();
  }
  o.opt("cut_area_frac", c.cut_area_frac);
  o.opt("cut_aspect", c.cut_aspect);
  o.opt("cut_fill_zero_prob", c.cut_fill_zero_prob);
  o.opt("use_rotate", c.use_rotate);
  o.opt("use_perm", c.use_perm);
  o.opt("use_jitter", c.use_jitter);
  o.req("seed", c.seed);
  o.finish();
  return c;
}

json to_json(const RunConfig& c) {
  json dataset{{"kind", to_string(c.dataset.kind)},
               {"path", c.dataset.path},
               {"root", c.dataset.root},
               {"image_size", c.dataset.image_size},
               {"channels", c.dataset.channels}};
  data::to_json(dataset["shapes"], c.dataset.shapes);
  return {{"dataset", dataset},
          {"normal_class", c.normal_class},
          {"augmentation", to_json(c.augmentation)},
          {"attention", to_json(c.attention)},
          {"adgan", to_json(c.adgan)},
          {"stage1", to_json(c.stage1)},
          {"stage2", to_json(c.stage2)},
          {"ablation",
           {{"disable_att", c.ablation.disable_att},
            {"disable_adv_ano", c.ablation.disable_adv_ano},
            {"skip_adgan", c.ablation.score == ScoreSource::adgan ? "none" : to_string(c.ablation.score)},
            {"synthesize_anomalies", c.ablation.synthesize_anomalies}}},
          {"eval",
           {{"pixel_pooling", metrics::to_string(c.eval.pixel_pooling)},
            {"threshold_policy", metrics::to_string(c.eval.threshold.kind)},
            {"validation_fraction", c.eval.threshold.validation_fraction},
            {"threshold_seed", c.eval.threshold.seed},
            {"fixed_threshold", c.eval.threshold.fixed_threshold},
            {"write_overlays", c.eval.write_overlays},
            {"batch_size", c.eval.batch_size}}},
          {"output_dir", c.output_dir},
          {"threads", c.threads}};
}

RunConfig run_config_from_json(const json& j) {
  RunConfig c;
  Obj o(j, "config");
  if (const auto* d = o.sub("dataset")) {
    Obj od(*d, "dataset");
    std::string kind = to_string(c.dataset.kind);
    od.opt("kind", kind);
    c.dataset.kind = dataset_kind_from_string(kind);
    od.opt("path", c.dataset.path);
    od.opt("root", c.dataset.root);
    od.opt("image_size", c.dataset.image_size);
    od.opt("channels", c.dataset.channels);
    if (const auto* s = od.sub("shapes")) {
      try {
        data::from_json(*s, c.dataset.shapes);
      } catch (const json::exception& e) {
        throw ConfigError(std::string("dataset.shapes: ") + e.what());
      }
    }
    od.finish();
  }
  o.opt("normal_class", c.normal_class);
  const auto* aug = o.sub("augmentation");
  if (!aug) throw ConfigError("config: missing required key 'augmentation' (its seed is mandatory)");
  c.augmentation = augmentation_from_json(*aug);
  if (const auto* a = o.sub("attention")) c.attention = attention_from_json(*a);
  if (const auto* a = o.sub("adgan")) c.adgan = adgan_from_json(*a);
  const auto* s1 = o.sub("stage1");
  const auto* s2 = o.sub("stage2");
  if (!s1 || !s2) throw ConfigError("config: 'stage1' and 'stage2' schedules (with seeds) are required");
  c.stage1 = stage_from_json(*s1, "stage1");
  c.stage2 = stage_from_json(*s2, "stage2");
  if (const auto* a = o.sub("ablation")) {
    Obj oa(*a, "ablation");
    oa.opt("disable_att", c.ablation.disable_att);
    oa.opt("disable_adv_ano", c.ablation.disable_adv_ano);
    std::string skip = "none";
    oa.opt("skip_adgan", skip);
    c.ablation.score = score_source_from_string(skip);
    oa.opt("synthesize_anomalies", c.ablation.synthesize_anomalies);
    oa.finish();
  }
  if (const auto* e = o.sub("eval")) {
    Obj oe(*e, "eval");
    std::string pooling = metrics::to_string(c.eval.pixel_pooling);
    std::string policy = metrics::to_string(c.eval.threshold.kind);
    oe.opt("pixel_pooling", pooling);
    oe.opt("threshold_policy", policy);
    oe.opt("validation_fraction", c.eval.threshold.validation_fraction);
    oe.opt("threshold_seed", c.eval.threshold.seed);
    oe.opt("fixed_threshold", c.eval.threshold.fixed_threshold);
    oe.opt("write_overlays", c.eval.write_overlays);
    oe.opt("batch_size", c.eval.batch_size);
    oe.finish();
    try {
      c.eval.pixel_pooling = metrics::pixel_pooling_from_string(pooling);
      c.eval.threshold.kind = metrics::threshold_kind_from_string(policy);
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& ex) {
      throw ConfigError(std::string("eval: ") + ex.what());
    }
  }
  o.opt("output_dir", c.output_dir);
  o.opt("threads", c.threads);
  o.finish();
  c.validate();
  return c;
}

void RunConfig::validate() const {
  if (dataset.kind != DatasetRef::Kind::shapes && dataset.path.empty()) {
    throw ConfigError("dataset.path is required for dataset kind '" + to_string(dataset.kind) + "'");
  }
  if (dataset.kind == DatasetRef::Kind::shapes) {
    dataset.shapes.validate();
    if (dataset.shapes.canvas_size != attention.image_size || dataset.shapes.channels != attention.channels) {
      throw ConfigError("dataset.shapes canvas/channels must match attention.image_size/channels");
    }
  } else if (dataset.image_size != attention.image_size || dataset.channels != attention.channels) {
    throw ConfigError("dataset.image_size/channels must match attention.image_size/channels");
  }
  augmentation.validate();
  attention.validate();
  adgan.validate(attention.image_size);
  for (const auto* s : {&stage1, &stage2}) {
    if (s->steps < 0 || s->batch_size < 1 || s->checkpoint_every < 1 || s->log_every < 1) {
      throw ConfigError("stage schedules need steps >= 0, batch_size/checkpoint_every/log_every >= 1");
    }
  }
  if (eval.batch_size < 1) throw ConfigError("eval.batch_size must be positive");
  if (!(eval.threshold.validation_fraction > 0.0 && eval.threshold.validation_fraction < 1.0)) {
    throw ConfigError("eval.validation_fraction must lie in (0, 1)");
  }
  if (threads < 1) throw ConfigError("threads must be positive");
  if (output_dir.empty()) throw ConfigError("output_dir must not be empty");

  // Ablation consistency.
  if (ablation.synthesize_anomalies && !augmentation.any_prime_step()) {
    throw ConfigError("ablation.synthesize_anomalies needs at least one of use_rotate/use_perm/use_jitter");
  }
  if (!ablation.synthesize_anomalies && ablation.disable_adv_ano) {
    throw ConfigError("ablation.disable_adv_ano is meaningless without synthesized anomalies");
  }
  if (ablation.score == ScoreSource::attn_discriminator && attention.weights.adv <= 0.0) {
    throw ConfigError("skip_adgan=attn_discriminator needs a trained discriminator (attention.weights.adv > 0)");
  }
  if (ablation.score == ScoreSource::recon_loss && attention.weights.rec <= 0.0) {
    throw ConfigError("skip_adgan=recon_loss needs attention.weights.rec > 0");
  }
}

attention::AttentionNetConfig RunConfig::effective_attention() const {
  auto c = attention;
  if (ablation.disable_att) c.weights.att = 0.0;
  if (ablation.disable_adv_ano || !ablation.synthesize_anomalies) c.weights.adv_ano = 0.0;
  return c;
}

adgan::AdganConfig RunConfig::effective_adgan() const {
  auto c = adgan;
  if (!ablation.synthesize_anomalies) c.lambda_anomaly_fake = 0.0;
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config '" + path.string() + "': " + e.what());
  }
  return run_config_from_json(j);
}

void save_run_config(const std::filesystem::path& path, const RunConfig& cfg) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << to_json(cfg).dump(2) << '\n';
}

}  // namespace attnad::pipeline
