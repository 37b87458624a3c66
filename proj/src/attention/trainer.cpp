#include "attnad/attention/trainer.hpp"

#include "attnad/common/errors.hpp"
#include "attnad/common/rng.hpp"
#include "attnad/common/tensor_util.hpp"

namespace attnad::attention {

namespace {

constexpr std::uint64_t kGeneratorInitStream = 101;
constexpr std::uint64_t kDiscriminatorInitStream = 102;

void set_requires_grad(torch::nn::Module& m, bool on) {
  for (auto& p : m.parameters()) p.requires_grad_(on);
}

double value(const torch::Tensor& t) { return t.item<double>(); }

void check_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw TrainingDivergence(std::string("attention network: ") + what + " is not finite", "");
}

}  // namespace

AttentionTrainer::AttentionTrainer(const AttentionNetConfig& cfg, const synth::AugmentationConfig& aug,
                                   std::uint64_t seed, bool synthesize_anomalies)
    : cfg_(cfg), aug_(aug), seed_(seed) {
  cfg_.validate();
  aug_.validate();
  use_anomalies_ = synthesize_anomalies && aug_.any_prime_step();
  generator_ = AttentionGenerator(cfg_);
  discriminator_ = Discriminator(cfg_.channels + 1, cfg_.image_size, cfg_.disc_base_width);
  seeded_init(*generator_, derive_seed(seed_, kGeneratorInitStream));
  seeded_init(*discriminator_, derive_seed(seed_, kDiscriminatorInitStream));
  generator_->load_pretrained_encoder();
  const auto opts = torch::optim::AdamOptions(cfg_.lr).betas({cfg_.beta1, cfg_.beta2});
  g_opt_ = std::make_unique<torch::optim::Adam>(generator_->parameters(), opts);
  d_opt_ = std::make_unique<torch::optim::Adam>(discriminator_->parameters(), opts);
}

LossBundle AttentionTrainer::step(const torch::Tensor& batch_normal, std::int64_t step_index) {
  check_image_batch(batch_normal, "train_step_attention");
  const auto& w = cfg_.weights;
  const auto n = batch_normal.size(0);
  const bool need_anomalies = use_anomalies_ && (w.adv_ano > 0.0 || w.att > 0.0);
  const bool adv_ano_on = need_anomalies && w.adv_ano > 0.0;

  generator_->train();
  discriminator_->train();

  torch::Tensor x_ano, a_ano;
  if (need_anomalies) {
    auto step_aug = aug_;
    step_aug.seed = derive_seed(aug_.seed, static_cast<std::uint64_t>(step_index));
    auto batch = synth::sample_anomaly_batch(batch_normal, step_aug);
    x_ano = std::move(batch.images);
    a_ano = std::move(batch.masks);
  }

  // Normal and anomaly images share one forward pass (and batch statistics).
  const auto input = need_anomalies ? torch::cat({batch_normal, x_ano}, 0) : batch_normal;
  auto noise_gen = make_generator(derive_seed(seed_, static_cast<std::uint64_t>(step_index)));
  const auto eps = torch::randn({input.size(0), cfg_.latent_dim}, noise_gen);
  const auto out = generator_(input, eps);

  const auto recon_nor = out.recon.narrow(0, 0, n);
  const auto attn_nor = out.attn.narrow(0, 0, n);
  torch::Tensor recon_ano, attn_ano;
  if (need_anomalies) {
    recon_ano = out.recon.narrow(0, n, n);
    attn_ano = out.attn.narrow(0, n, n);
  }
  const auto a_nor = torch::ones_like(attn_nor);

  LossBundle bundle;

  // Discriminator update.
  if (w.adv > 0.0 || adv_ano_on) {
    d_opt_->zero_grad();
    torch::Tensor d_loss;
    if (w.adv > 0.0) {
      const auto d_adv = discriminator_loss_from_logits(discriminator_logits(discriminator_, batch_normal, a_nor),
                                                        discriminator_logits(discriminator_, recon_nor.detach(),
                                                                             attn_nor.detach()));
      bundle.d_adv = value(d_adv);
      d_loss = w.adv * d_adv;
    }
    if (adv_ano_on) {
      const auto d_ano = discriminator_loss_from_logits(
          discriminator_logits(discriminator_, x_ano, a_ano),
          discriminator_logits(discriminator_, recon_ano.detach(), attn_ano.detach()));
      bundle.d_adv_ano = value(d_ano);
      d_loss = d_loss.defined() ? d_loss + w.adv_ano * d_ano : w.adv_ano * d_ano;
    }
    bundle.d_total = value(d_loss);
    check_finite(bundle.d_total, "discriminator loss");
    d_loss.backward();
    d_opt_->step();
  }

  // Generator update.
  g_opt_->zero_grad();
  set_requires_grad(*discriminator_, false);
  torch::Tensor g_loss;
  auto add = [&](double weight, const torch::Tensor& term) {
    auto weighted = weight * term;
    g_loss = g_loss.defined() ? g_loss + weighted : weighted;
  };
  if (w.adv > 0.0) {
    const auto l = generator_adv_from_logits(discriminator_logits(discriminator_, recon_nor, attn_nor));
    bundle.l_adv = value(l);
    add(w.adv, l);
  }
  if (adv_ano_on) {
    const auto l = generator_adv_from_logits(discriminator_logits(discriminator_, recon_ano, attn_ano));
    bundle.l_adv_ano = value(l);
    add(w.adv_ano, l);
  }
  const auto rec = reconstruction_nll(batch_normal, recon_nor);
  const auto kl = kl_divergence(out.latent_mean.narrow(0, 0, n), out.latent_logvar.narrow(0, 0, n));
  const auto att = loss_attention(attn_nor, attn_ano, a_nor, a_ano);
  bundle.l_g_rec = value(rec);
  bundle.l_g_kl = value(kl);
  bundle.l_att = value(att);
  if (w.rec > 0.0) add(w.rec, rec);
  if (w.kl > 0.0) add(w.kl, kl);
  if (w.att > 0.0) add(w.att, att);
  bundle.total = weighted_total(bundle, w);
  check_finite(bundle.total, "generator loss");
  if (!bundle.all_finite()) throw TrainingDivergence("attention network: loss component is not finite", "");
  if (g_loss.defined()) {
    g_loss.backward();
    g_opt_->step();
  }
  set_requires_grad(*discriminator_, true);
  return bundle;
}

void AttentionTrainer::save(torch::serialize::OutputArchive& archive) {
  torch::serialize::OutputArchive gen, disc, g_opt, d_opt;
  generator_->save(gen);
  discriminator_->save(disc);
  g_opt_->save(g_opt);
  d_opt_->save(d_opt);
  archive.write("generator", gen);
  archive.write("discriminator", disc);
  archive.write("generator_optimizer", g_opt);
  archive.write("discriminator_optimizer", d_opt);
}

void AttentionTrainer::load(torch::serialize::InputArchive& archive) {
  torch::serialize::InputArchive gen, disc, g_opt, d_opt;
  archive.read("generator", gen);
  archive.read("discriminator", disc);
  archive.read("generator_optimizer", g_opt);
  archive.read("discriminator_optimizer", d_opt);
  generator_->load(gen);
  discriminator_->load(disc);
  g_opt_->load(g_opt);
  d_opt_->load(d_opt);
}

GeneratorOutput predict(AttentionGenerator& gen, const torch::Tensor& x, std::int64_t batch_size) {
  torch::NoGradGuard no_grad;
  const bool was_training = gen->is_training();
  gen->eval();
  std::vector<torch::Tensor> recon, attn, mean, logvar;
  for (int64_t i = 0; i < x.size(0); i += batch_size) {
    const auto out = gen(x.narrow(0, i, std::min(batch_size, x.size(0) - i)));
    recon.push_back(out.recon);
    attn.push_back(out.attn);
    mean.push_back(out.latent_mean);
    logvar.push_back(out.latent_logvar);
  }
  gen->train(was_training);
  return {torch::cat(recon), torch::cat(attn), torch::cat(mean), torch::cat(logvar)};
}

}  // namespace attnad::attention
