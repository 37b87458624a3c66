#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <functional>

#include "attnad/attention/networks.hpp"

// Stage-2 detection GAN over attention-masked feature maps:
//
//   F_Img = extractor(x)            two stride-1 conv layers, [N, K, H, W]
//   F_Nor = F_Img * A_Gen(x)        mask broadcast over the K channels
//   score = 1 - D(F_Nor)            higher is more anomalous

namespace attnad::adgan {

struct AdganConfig {
  int feature_channels = 64;
  attention::EncoderConfig encoder;
  int latent_dim = 128;
  int decoder_width = 32;
  int disc_base_width = 32;
  double lambda_adv = 1.0;
  double lambda_rec = 1.0;
  /// Weight of an extra discriminator term that labels the masked features
  /// of synthesized anomalies as fake. 0 disables it.
  double lambda_anomaly_fake = 0.0;
  double lr = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;

  bool operator==(const AdganConfig&) const = default;
  void validate(int image_size) const;
};

/// Two 3x3 stride-1 convolutions with LeakyReLU; preserves H and W.
class FeatureExtractorImpl : public torch::nn::Module {
 public:
  FeatureExtractorImpl(int in_channels, int feature_channels);
  torch::Tensor forward(const torch::Tensor& x);
  torch::nn::Conv2d& conv1() { return conv1_; }
  torch::nn::Conv2d& conv2() { return conv2_; }

 private:
  torch::nn::Conv2d conv1_{nullptr}, conv2_{nullptr};
};
TORCH_MODULE(FeatureExtractor);

/// Feature-space autoencoder: the stage-1 encoder topology, a linear
/// bottleneck and a transposed-convolution decoder back to K channels.
class FeatureAutoencoderImpl : public torch::nn::Module {
 public:
  FeatureAutoencoderImpl(int feature_channels, int image_size, const AdganConfig& cfg);
  torch::Tensor forward(const torch::Tensor& f);

 private:
  int enc_channels_;
  int side_;
  attention::ResNetEncoder encoder_{nullptr};
  torch::nn::Linear to_latent_{nullptr}, from_latent_{nullptr};
  attention::UpDecoder decoder_{nullptr};
  torch::nn::Conv2d out_{nullptr};
};
TORCH_MODULE(FeatureAutoencoder);

class AdganImpl : public torch::nn::Module {
 public:
  AdganImpl(int image_channels, int image_size, const AdganConfig& cfg);

  FeatureExtractor extractor{nullptr};
  FeatureAutoencoder generator{nullptr};
  attention::Discriminator discriminator{nullptr};
};
TORCH_MODULE(Adgan);

/// F_Img for an image batch. Spatial dims equal the input's.
torch::Tensor extract_features(FeatureExtractor& extractor, const torch::Tensor& x);

/// F[n, k, h, w] * A[n, 0, h, w].
torch::Tensor mask_features(const torch::Tensor& f, const torch::Tensor& a);

/// 1 - disc(f_nor), with `disc` returning realness in [0, 1] per sample.
torch::Tensor score_from_features(const torch::Tensor& f_nor,
                                  const std::function<torch::Tensor(const torch::Tensor&)>& disc);

/// Image-level anomaly score in [0, 1] using both snapshots in eval mode.
/// Training flags are restored afterwards.
torch::Tensor anomaly_score(const torch::Tensor& x, attention::AttentionGenerator& attn_net, Adgan& adgan,
                            std::int64_t batch_size = 64);

}  // namespace attnad::adgan
