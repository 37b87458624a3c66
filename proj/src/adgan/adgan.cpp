#include "attnad/adgan/adgan.hpp"

#include "attnad/common/errors.hpp"
#include "attnad/common/tensor_util.hpp"

namespace attnad::adgan {

namespace nn = torch::nn;

void AdganConfig::validate(int image_size) const {
  if (feature_channels <= 0 || latent_dim <= 0 || decoder_width <= 0 || disc_base_width <= 0) {
    throw ConfigError("adgan sizes must be positive");
  }
  if (encoder.blocks.empty() || image_size % encoder.downsample() != 0) {
    throw ConfigError("adgan encoder scale does not divide the image size");
  }
  for (double w : {lambda_adv, lambda_rec, lambda_anomaly_fake}) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw ConfigError("adgan loss weights must be finite and >= 0");
  }
  if (lambda_adv <= 0.0 && lambda_rec <= 0.0) throw ConfigError("adgan needs a non-zero generator loss");
  if (!(lr > 0.0)) throw ConfigError("adgan.lr must be positive");
}

FeatureExtractorImpl::FeatureExtractorImpl(int in_channels, int feature_channels) {
  conv1_ = register_module("conv1", nn::Conv2d(nn::Conv2dOptions(in_channels, feature_channels, 3).padding(1)));
  conv2_ = register_module("conv2", nn::Conv2d(nn::Conv2dOptions(feature_channels, feature_channels, 3).padding(1)));
}

torch::Tensor FeatureExtractorImpl::forward(const torch::Tensor& x) {
  auto y = torch::leaky_relu(conv1_(x), 0.2);
  return torch::leaky_relu(conv2_(y), 0.2);
}

FeatureAutoencoderImpl::FeatureAutoencoderImpl(int feature_channels, int image_size, const AdganConfig& cfg) {
  enc_channels_ = cfg.encoder.out_channels();
  side_ = image_size / cfg.encoder.downsample();
  const int flat = enc_channels_ * side_ * side_;
  encoder_ = register_module("encoder", attention::ResNetEncoder(feature_channels, cfg.encoder));
  to_latent_ = register_module("to_latent", nn::Linear(flat, cfg.latent_dim));
  from_latent_ = register_module("from_latent", nn::Linear(cfg.latent_dim, flat));
  decoder_ = register_module("decoder", attention::UpDecoder(enc_channels_, cfg.decoder_width, cfg.encoder.stages()));
  out_ = register_module("out", nn::Conv2d(nn::Conv2dOptions(cfg.decoder_width, feature_channels, 3).padding(1)));
}

torch::Tensor FeatureAutoencoderImpl::forward(const torch::Tensor& f) {
  const auto z = to_latent_(encoder_(f).flatten(1));
  auto h = torch::relu(from_latent_(z)).view({-1, enc_channels_, side_, side_});
  return out_(decoder_(h));
}

AdganImpl::AdganImpl(int image_channels, int image_size, const AdganConfig& cfg) {
  cfg.validate(image_size);
  extractor = register_module("extractor", FeatureExtractor(image_channels, cfg.feature_channels));
  generator = register_module("generator", FeatureAutoencoder(cfg.feature_channels, image_size, cfg));
  discriminator = register_module(
      "discriminator", attention::Discriminator(cfg.feature_channels, image_size, cfg.disc_base_width));
}

torch::Tensor extract_features(FeatureExtractor& extractor, const torch::Tensor& x) {
  check_image_batch(x, "extract_features");
  return extractor(x);
}

torch::Tensor mask_features(const torch::Tensor& f, const torch::Tensor& a) {
  if (f.dim() != 4 || a.dim() != 4 || a.size(1) != 1 || a.size(0) != f.size(0) || a.size(2) != f.size(2) ||
      a.size(3) != f.size(3)) {
    throw ShapeError("mask_features: attention map [N, 1, H, W] must align with features [N, K, H, W]");
  }
  return f * a;
}

torch::Tensor score_from_features(const torch::Tensor& f_nor,
                                  const std::function<torch::Tensor(const torch::Tensor&)>& disc) {
  return 1.0 - disc(f_nor);
}

torch::Tensor anomaly_score(const torch::Tensor& x, attention::AttentionGenerator& attn_net, Adgan& adgan,
                            std::int64_t batch_size) {
  check_image_batch(x, "anomaly_score");
  torch::NoGradGuard no_grad;
  const bool attn_training = attn_net->is_training();
  const bool adgan_training = adgan->is_training();
  attn_net->eval();
  adgan->eval();
  auto disc = [&](const torch::Tensor& f) { return torch::sigmoid(adgan->discriminator(f)); };
  std::vector<torch::Tensor> scores;
  for (int64_t i = 0; i < x.size(0); i += batch_size) {
    const auto chunk = x.narrow(0, i, std::min(batch_size, x.size(0) - i));
    const auto attn = attn_net(chunk).attn;
    scores.push_back(score_from_features(mask_features(adgan->extractor(chunk), attn), disc));
  }
  attn_net->train(attn_training);
  adgan->train(adgan_training);
  return scores.empty() ? torch::empty({0}) : torch::cat(scores);
}

}  // namespace attnad::adgan
