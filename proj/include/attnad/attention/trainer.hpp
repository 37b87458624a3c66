#pragma once

#include <torch/torch.h>

#include <cstdint>

#include "attnad/attention/losses.hpp"
#include "attnad/attention/networks.hpp"
#include "attnad/synth/anomaly_synth.hpp"

namespace attnad::attention {

/// Owns the stage-1 generator, discriminator and their optimizers.
///
/// One step = one discriminator update on the adversarial terms followed by
/// one generator update on the adversarial, reconstruction/KL and attention
/// terms. Anomalies are synthesized from the normal batch with a seed derived
/// from (augmentation seed, step index), and the latent noise comes from
/// (trainer seed, step index), so a step is a pure function of the current
/// state, the batch and the step index.
///
/// A term whose weight is zero is not evaluated at all; a zero-weighted
/// model therefore follows the same trajectory as one without that term.
class AttentionTrainer {
 public:
  /// `synthesize_anomalies == false` trains on normal data only: the
  /// adversarial anomaly loss and the anomaly half of the attention loss are
  /// inactive.
  AttentionTrainer(const AttentionNetConfig& cfg, const synth::AugmentationConfig& aug, std::uint64_t seed,
                   bool synthesize_anomalies = true);

  LossBundle step(const torch::Tensor& batch_normal, std::int64_t step_index);

  bool uses_anomalies() const { return use_anomalies_; }
  const AttentionNetConfig& config() const { return cfg_; }
  AttentionGenerator& generator() { return generator_; }
  Discriminator& discriminator() { return discriminator_; }

  void save(torch::serialize::OutputArchive& archive);
  void load(torch::serialize::InputArchive& archive);

 private:
  AttentionNetConfig cfg_;
  synth::AugmentationConfig aug_;
  std::uint64_t seed_;
  bool use_anomalies_;
  AttentionGenerator generator_{nullptr};
  Discriminator discriminator_{nullptr};
  std::unique_ptr<torch::optim::Adam> g_opt_;
  std::unique_ptr<torch::optim::Adam> d_opt_;
};

/// Eval-mode, gradient-free forward over `x` in chunks of `batch_size`.
/// The module's training flag is restored afterwards.
GeneratorOutput predict(AttentionGenerator& gen, const torch::Tensor& x, std::int64_t batch_size = 64);

}  // namespace attnad::attention
