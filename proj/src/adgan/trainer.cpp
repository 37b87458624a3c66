#include "attnad/adgan/trainer.hpp"

#include <cmath>

#include "attnad/attention/losses.hpp"
#include "attnad/common/errors.hpp"
#include "attnad/common/rng.hpp"
#include "attnad/common/tensor_util.hpp"

namespace attnad::adgan {

namespace {

constexpr std::uint64_t kInitStream = 201;
constexpr std::uint64_t kAnomalyStream = 202;

double value(const torch::Tensor& t) { return t.item<double>(); }

}  // namespace

bool AdganLossBundle::all_finite() const {
  for (double v : {d_real, d_fake, d_anomaly, d_total, g_adv, g_rec, g_total}) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

AdganTrainer::AdganTrainer(const AdganConfig& cfg, attention::AttentionGenerator frozen_attention,
                           int image_channels, int image_size, const synth::AugmentationConfig& aug,
                           std::uint64_t seed)
    : cfg_(cfg), attention_(std::move(frozen_attention)), aug_(aug), seed_(seed) {
  cfg_.validate(image_size);
  attention_->eval();
  for (auto& p : attention_->parameters()) p.requires_grad_(false);

  model_ = Adgan(image_channels, image_size, cfg_);
  attention::seeded_init(*model_, derive_seed(seed_, kInitStream));
  const auto opts = torch::optim::AdamOptions(cfg_.lr).betas({cfg_.beta1, cfg_.beta2});
  g_opt_ = std::make_unique<torch::optim::Adam>(model_->generator->parameters(), opts);
  auto d_params = model_->discriminator->parameters();
  for (auto& p : model_->extractor->parameters()) d_params.push_back(p);
  d_opt_ = std::make_unique<torch::optim::Adam>(d_params, opts);
}

torch::Tensor AdganTrainer::attention_map(const torch::Tensor& x) {
  torch::NoGradGuard no_grad;
  attention_->eval();
  return attention_(x).attn;
}

AdganLossBundle AdganTrainer::step(const torch::Tensor& batch_normal, std::int64_t step_index) {
  check_image_batch(batch_normal, "train_step_adgan");
  model_->train();
  AdganLossBundle bundle;

  const auto attn = attention_map(batch_normal);
  const auto f_nor = mask_features(model_->extractor(batch_normal), attn);

  torch::Tensor f_ano;
  if (cfg_.lambda_anomaly_fake > 0.0 && aug_.any_prime_step()) {
    auto step_aug = aug_;
    step_aug.seed = derive_seed(derive_seed(aug_.seed, kAnomalyStream), static_cast<std::uint64_t>(step_index));
    const auto anomalies = synth::sample_anomaly_batch(batch_normal, step_aug);
    f_ano = mask_features(model_->extractor(anomalies.images), attention_map(anomalies.images));
  }

  // Discriminator (and feature extractor) update.
  d_opt_->zero_grad();
  const auto target = f_nor.detach();
  const auto recon = model_->generator(target);
  const auto real_logits = model_->discriminator(f_nor);
  const auto fake_logits = model_->discriminator(recon.detach());
  const auto d_real = torch::softplus(-real_logits).mean();
  const auto d_fake = torch::softplus(fake_logits).mean();
  auto d_loss = d_real + d_fake;
  bundle.d_real = value(d_real);
  bundle.d_fake = value(d_fake);
  if (f_ano.defined()) {
    const auto d_ano = torch::softplus(model_->discriminator(f_ano)).mean();
    bundle.d_anomaly = value(d_ano);
    d_loss = d_loss + cfg_.lambda_anomaly_fake * d_ano;
  }
  bundle.d_total = value(d_loss);
  if (!std::isfinite(bundle.d_total)) throw TrainingDivergence("adgan: discriminator loss is not finite", "");
  d_loss.backward();
  d_opt_->step();

  // Generator update.
  g_opt_->zero_grad();
  for (auto& p : model_->discriminator->parameters()) p.requires_grad_(false);
  torch::Tensor g_loss;
  const auto rec = (recon - target).pow(2).mean();
  bundle.g_rec = value(rec);
  if (cfg_.lambda_rec > 0.0) g_loss = cfg_.lambda_rec * rec;
  if (cfg_.lambda_adv > 0.0) {
    const auto adv = attention::generator_adv_from_logits(model_->discriminator(recon));
    bundle.g_adv = value(adv);
    g_loss = g_loss.defined() ? g_loss + cfg_.lambda_adv * adv : cfg_.lambda_adv * adv;
  }
  bundle.g_total = cfg_.lambda_rec * bundle.g_rec + cfg_.lambda_adv * bundle.g_adv;
  if (!bundle.all_finite()) {
    for (auto& p : model_->discriminator->parameters()) p.requires_grad_(true);
    throw TrainingDivergence("adgan: loss is not finite", "");
  }
  g_loss.backward();
  g_opt_->step();
  for (auto& p : model_->discriminator->parameters()) p.requires_grad_(true);
  return bundle;
}

void AdganTrainer::save(torch::serialize::OutputArchive& archive) {
  torch::serialize::OutputArchive model, g_opt, d_opt;
  model_->save(model);
  g_opt_->save(g_opt);
  d_opt_->save(d_opt);
  archive.write("adgan", model);
  archive.write("generator_optimizer", g_opt);
  archive.write("discriminator_optimizer", d_opt);
}

void AdganTrainer::load(torch::serialize::InputArchive& archive) {
  torch::serialize::InputArchive model, g_opt, d_opt;
  archive.read("adgan", model);
  archive.read("generator_optimizer", g_opt);
  archive.read("discriminator_optimizer", d_opt);
  model_->load(model);
  g_opt_->load(g_opt);
  d_opt_->load(d_opt);
}

}  // namespace attnad::adgan
