#include "attnad/attention/losses.hpp"

#include <cmath>

#include "attnad/common/errors.hpp"
#include "attnad/common/tensor_util.hpp"

namespace attnad::attention {

namespace {

void require_finite(const torch::Tensor& t, const char* what) {
  if (!all_finite(t)) throw TrainingDivergence(std::string(what) + " contains non-finite values", "");
}

torch::Tensor cross_entropy(const torch::Tensor& d_real, const torch::Tensor& d_fake, const char* what) {
  require_finite(d_real, what);
  require_finite(d_fake, what);
  return -torch::log(d_real).mean() - torch::log1p(-d_fake).mean();
}

}  // namespace

torch::Tensor loss_adv(const torch::Tensor& d_real, const torch::Tensor& d_fake) {
  return cross_entropy(d_real, d_fake, "loss_adv scores");
}

torch::Tensor loss_adv_ano(const torch::Tensor& d_ano_real, const torch::Tensor& d_ano_fake) {
  return cross_entropy(d_ano_real, d_ano_fake, "loss_adv_ano scores");
}

torch::Tensor discriminator_loss_from_logits(const torch::Tensor& real_logits, const torch::Tensor& fake_logits) {
  // -log sigmoid(r) = softplus(-r); -log(1 - sigmoid(f)) = softplus(f)
  return torch::softplus(-real_logits).mean() + torch::softplus(fake_logits).mean();
}

torch::Tensor generator_adv_from_logits(const torch::Tensor& fake_logits) {
  return torch::softplus(-fake_logits).mean();
}

torch::Tensor reconstruction_nll(const torch::Tensor& x, const torch::Tensor& recon) {
  return 0.5 * (recon - x).pow(2).mean();
}

torch::Tensor kl_divergence(const torch::Tensor& mean, const torch::Tensor& logvar) {
  require_finite(logvar, "latent logvar");
  return 0.5 * (mean.pow(2) + logvar.exp() - logvar - 1.0).sum(1).mean();
}

GeneratorLoss loss_generator(const torch::Tensor& x, const GeneratorOutput& out) {
  return {reconstruction_nll(x, out.recon), kl_divergence(out.latent_mean, out.latent_logvar)};
}

torch::Tensor loss_attention(const torch::Tensor& a_gen_nor, const torch::Tensor& a_gen_ano,
                             const torch::Tensor& a_nor, const torch::Tensor& a_ano) {
  if (a_gen_nor.sizes() != a_nor.sizes()) throw ShapeError("loss_attention: normal maps misaligned");
  auto loss = (a_gen_nor - a_nor).pow(2).mean();
  if (a_gen_ano.defined()) {
    if (!a_ano.defined() || a_gen_ano.sizes() != a_ano.sizes()) {
      throw ShapeError("loss_attention: anomaly maps misaligned");
    }
    loss = loss + (a_gen_ano - a_ano).pow(2).mean();
  }
  return loss;
}

bool LossBundle::all_finite() const {
  for (double v : {l_adv, l_adv_ano, l_g_rec, l_g_kl, l_att, total, d_adv, d_adv_ano, d_total}) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

double weighted_total(const LossBundle& b, const LossWeights& w) {
  return w.adv * b.l_adv + w.adv_ano * b.l_adv_ano + w.rec * b.l_g_rec + w.kl * b.l_g_kl + w.att * b.l_att;
}

}  // namespace attnad::attention
