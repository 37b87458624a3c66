#pragma once

#include <torch/torch.h>

#include "attnad/attention/networks.hpp"

namespace attnad::attention {

// Discriminator-side cross-entropy, per-sample mean:
//   -E[log d_real] - E[log(1 - d_fake)]
// The probability forms validate their inputs and throw TrainingDivergence
// on non-finite scores; the logit forms are what the trainer optimises.

/// Real pair (x_In, all-ones map), fake pair (x_Re, A_Gen).
torch::Tensor loss_adv(const torch::Tensor& d_real, const torch::Tensor& d_fake);
/// Real pair (x_Ano, A_Ano), fake pair (reconstruction of x_Ano, its A_Gen).
torch::Tensor loss_adv_ano(const torch::Tensor& d_ano_real, const torch::Tensor& d_ano_fake);

torch::Tensor discriminator_loss_from_logits(const torch::Tensor& real_logits, const torch::Tensor& fake_logits);
/// Non-saturating generator objective -E[log D(fake)].
torch::Tensor generator_adv_from_logits(const torch::Tensor& fake_logits);

/// Half mean squared error: unit-variance Gaussian NLL without its constant.
torch::Tensor reconstruction_nll(const torch::Tensor& x, const torch::Tensor& recon);
/// KL(N(mean, exp(logvar)) || N(0, I)) summed over the latent, mean over batch.
torch::Tensor kl_divergence(const torch::Tensor& mean, const torch::Tensor& logvar);

struct GeneratorLoss {
  torch::Tensor rec;
  torch::Tensor kl;
};
GeneratorLoss loss_generator(const torch::Tensor& x, const GeneratorOutput& out);

/// Per-pixel mean of (A_Gen^nor - A_Nor)^2 plus per-pixel mean of
/// (A_Gen^ano - A_Ano)^2. Pass undefined anomaly tensors to drop the second
/// term (no synthesized anomalies).
torch::Tensor loss_attention(const torch::Tensor& a_gen_nor, const torch::Tensor& a_gen_ano,
                             const torch::Tensor& a_nor, const torch::Tensor& a_ano);

/// Scalar loss values of one training step.
struct LossBundle {
  // generator side
  double l_adv = 0.0;
  double l_adv_ano = 0.0;
  double l_g_rec = 0.0;
  double l_g_kl = 0.0;
  double l_att = 0.0;
  double total = 0.0;
  // discriminator side
  double d_adv = 0.0;
  double d_adv_ano = 0.0;
  double d_total = 0.0;

  bool all_finite() const;
};

/// The weighted generator-side sum; LossBundle::total is always this value.
double weighted_total(const LossBundle& b, const LossWeights& w);

}  // namespace attnad::attention
