#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <memory>

#include "attnad/adgan/adgan.hpp"
#include "attnad/attention/networks.hpp"
#include "attnad/synth/anomaly_synth.hpp"

namespace attnad::adgan {

struct AdganLossBundle {
  double d_real = 0.0;     // -E[log D(F_Nor)]
  double d_fake = 0.0;     // -E[log(1 - D(G(F_Nor)))]
  double d_anomaly = 0.0;  // -E[log(1 - D(F_Nor of synthesized anomalies))]
  double d_total = 0.0;
  double g_adv = 0.0;
  double g_rec = 0.0;  // mean squared feature reconstruction error
  double g_total = 0.0;

  bool all_finite() const;
};

/// Trains the detection GAN on masked features of normal images. The
/// attention generator is a frozen snapshot: it is switched to eval mode,
/// its parameters stop requiring gradients and it is only ever run under
/// NoGradGuard. The feature extractor is optimised together with the
/// discriminator.
class AdganTrainer {
 public:
  AdganTrainer(const AdganConfig& cfg, attention::AttentionGenerator frozen_attention, int image_channels,
               int image_size, const synth::AugmentationConfig& aug, std::uint64_t seed);

  AdganLossBundle step(const torch::Tensor& batch_normal, std::int64_t step_index);

  Adgan& model() { return model_; }
  attention::AttentionGenerator& attention() { return attention_; }

  void save(torch::serialize::OutputArchive& archive);
  void load(torch::serialize::InputArchive& archive);

 private:
  torch::Tensor attention_map(const torch::Tensor& x);

  AdganConfig cfg_;
  attention::AttentionGenerator attention_;
  synth::AugmentationConfig aug_;
  std::uint64_t seed_;
  Adgan model_{nullptr};
  std::unique_ptr<torch::optim::Adam> g_opt_;
  std::unique_ptr<torch::optim::Adam> d_opt_;
};

}  // namespace attnad::adgan
