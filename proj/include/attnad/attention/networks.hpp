#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <string>
#include <vector>

namespace attnad::attention {

/// ResNet-18-style encoder: a stride-2 3x3 stem followed by one stage of
/// BasicBlocks per entry of `blocks`, widths doubling per stage and every
/// stage after the first halving the resolution. Total down-sampling is
/// 2^blocks.size(), i.e. 16 for the default four stages.
struct EncoderConfig {
  int base_width = 16;
  std::vector<int> blocks{2, 2, 2, 2};
  /// Optional archive with encoder weights (e.g. converted ImageNet weights).
  std::string pretrained_weights;

  bool operator==(const EncoderConfig&) const = default;
  int stages() const { return static_cast<int>(blocks.size()); }
  int downsample() const { return 1 << stages(); }
  int out_channels() const { return base_width << (stages() - 1); }
};

struct LossWeights {
  double adv = 1.0;
  double adv_ano = 1.0;
  double rec = 1.0;
  double kl = 1.0;
  double att = 1.0;
  bool operator==(const LossWeights&) const = default;
};

struct AttentionNetConfig {
  int image_size = 64;
  int channels = 3;
  int latent_dim = 128;
  EncoderConfig encoder;
  /// Channel count of the decoder trunk at full resolution; the heads keep it.
  int decoder_width = 16;
  int disc_base_width = 16;
  LossWeights weights;
  double lr = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;

  bool operator==(const AttentionNetConfig&) const = default;
  /// Throws ConfigError if the decoder cannot return to the input size.
  void validate() const;
};

// ---------------------------------------------------------------------------
// Building blocks (also used by the stage-2 GAN)

class BasicBlockImpl : public torch::nn::Module {
 public:
  BasicBlockImpl(int in_channels, int out_channels, int stride);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  torch::nn::Conv2d conv1_{nullptr}, conv2_{nullptr};
  torch::nn::BatchNorm2d bn1_{nullptr}, bn2_{nullptr};
  torch::nn::Sequential shortcut_{nullptr};
};
TORCH_MODULE(BasicBlock);

class ResNetEncoderImpl : public torch::nn::Module {
 public:
  ResNetEncoderImpl(int in_channels, const EncoderConfig& cfg);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  torch::nn::Sequential body_{nullptr};
};
TORCH_MODULE(ResNetEncoder);

/// `stages` stride-2 transposed convolutions, each doubling the resolution.
/// Channels halve per stage from `in_channels` down to `out_channels`.
class UpDecoderImpl : public torch::nn::Module {
 public:
  UpDecoderImpl(int in_channels, int out_channels, int stages);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  torch::nn::Sequential body_{nullptr};
};
TORCH_MODULE(UpDecoder);

/// Three 3x3 convolutions; sigmoid output when `squash` is set.
class ConvHeadImpl : public torch::nn::Module {
 public:
  ConvHeadImpl(int in_channels, int out_channels, bool squash);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  torch::nn::Sequential body_{nullptr};
  bool squash_;
};
TORCH_MODULE(ConvHead);

/// DCGAN-style discriminator: stride-2 4x4 convolutions with LeakyReLU down
/// to a small map, then a single full-extent convolution to one logit.
class DiscriminatorImpl : public torch::nn::Module {
 public:
  DiscriminatorImpl(int in_channels, int image_size, int base_width);
  /// Logits [N].
  torch::Tensor forward(const torch::Tensor& x);
  int in_channels() const { return in_channels_; }

 private:
  torch::nn::Sequential body_{nullptr};
  int in_channels_;
};
TORCH_MODULE(Discriminator);

// ---------------------------------------------------------------------------
// Attention network

struct GeneratorOutput {
  torch::Tensor recon;          // [N, C, H, W] in [0, 1]
  torch::Tensor attn;           // [N, 1, H, W] in [0, 1]
  torch::Tensor latent_mean;    // [N, Z]
  torch::Tensor latent_logvar;  // [N, Z]
};

/// Variational encoder-decoder with two output heads: the reconstruction and
/// the attention map.
class AttentionGeneratorImpl : public torch::nn::Module {
 public:
  explicit AttentionGeneratorImpl(const AttentionNetConfig& cfg);

  /// In training mode the latent is sampled as mean + exp(logvar / 2) * eps
  /// (eps drawn from the global generator when not supplied); in eval mode
  /// the latent is the mean and the call is deterministic.
  GeneratorOutput forward(const torch::Tensor& x, const torch::Tensor& eps = {});

  /// Loads encoder.pretrained_weights when configured; no-op otherwise.
  void load_pretrained_encoder();

  int latent_dim() const { return cfg_.latent_dim; }
  ResNetEncoder& encoder() { return encoder_; }

 private:
  AttentionNetConfig cfg_;
  int bottleneck_side_;
  ResNetEncoder encoder_{nullptr};
  torch::nn::Linear to_mean_{nullptr}, to_logvar_{nullptr}, from_latent_{nullptr};
  UpDecoder decoder_{nullptr};
  ConvHead recon_head_{nullptr}, attn_head_{nullptr};
};
TORCH_MODULE(AttentionGenerator);

/// Probability-like realness in (0, 1) of channel-concatenated (image, map)
/// pairs, one value per sample.
torch::Tensor discriminator_forward(Discriminator& disc, const torch::Tensor& img, const torch::Tensor& attn);
/// Same, as logits.
torch::Tensor discriminator_logits(Discriminator& disc, const torch::Tensor& img, const torch::Tensor& attn);

/// Re-initialise every convolution, linear and batch-norm layer of `module`
/// from a generator seeded with `seed` (uniform +-1/sqrt(fan_in), the usual
/// default). Makes construction independent of global RNG state.
void seeded_init(torch::nn::Module& module, std::uint64_t seed);

}  // namespace attnad::attention
