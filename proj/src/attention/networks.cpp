#include "attnad/attention/networks.hpp"

#include <cmath>
#include <string>

#include "attnad/common/errors.hpp"
#include "attnad/common/tensor_util.hpp"

namespace attnad::attention {

namespace nn = torch::nn;

void AttentionNetConfig::validate() const {
  if (channels != 1 && channels != 3) throw ConfigError("attention.channels must be 1 or 3");
  if (latent_dim <= 0) throw ConfigError("attention.latent_dim must be positive");
  if (encoder.blocks.empty()) throw ConfigError("attention.encoder.blocks must not be empty");
  for (int b : encoder.blocks) {
    if (b <= 0) throw ConfigError("attention.encoder.blocks entries must be positive");
  }
  if (encoder.base_width <= 0 || decoder_width <= 0 || disc_base_width <= 0) {
    throw ConfigError("attention widths must be positive");
  }
  if (image_size <= 0 || image_size % encoder.downsample() != 0) {
    throw ConfigError("image_size " + std::to_string(image_size) + " is not a multiple of the decoder scale " +
                      std::to_string(encoder.downsample()));
  }
  for (double w : {weights.adv, weights.adv_ano, weights.rec, weights.kl, weights.att}) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw ConfigError("loss weights must be finite and >= 0");
  }
  if (!(lr > 0.0)) throw ConfigError("attention.lr must be positive");
}

BasicBlockImpl::BasicBlockImpl(int in_channels, int out_channels, int stride) {
  conv1_ = register_module(
      "conv1", nn::Conv2d(nn::Conv2dOptions(in_channels, out_channels, 3).stride(stride).padding(1).bias(false)));
  bn1_ = register_module("bn1", nn::BatchNorm2d(out_channels));
  conv2_ = register_module(
      "conv2", nn::Conv2d(nn::Conv2dOptions(out_channels, out_channels, 3).stride(1).padding(1).bias(false)));
  bn2_ = register_module("bn2", nn::BatchNorm2d(out_channels));
  if (stride != 1 || in_channels != out_channels) {
    shortcut_ = register_module(
        "shortcut",
        nn::Sequential(nn::Conv2d(nn::Conv2dOptions(in_channels, out_channels, 1).stride(stride).bias(false)),
                       nn::BatchNorm2d(out_channels)));
  }
}

torch::Tensor BasicBlockImpl::forward(const torch::Tensor& x) {
  auto y = torch::relu(bn1_(conv1_(x)));
  y = bn2_(conv2_(y));
  return torch::relu(y + (shortcut_ ? shortcut_->forward(x) : x));
}

ResNetEncoderImpl::ResNetEncoderImpl(int in_channels, const EncoderConfig& cfg) {
  nn::Sequential body;
  body->push_back(nn::Conv2d(nn::Conv2dOptions(in_channels, cfg.base_width, 3).stride(2).padding(1).bias(false)));
  body->push_back(nn::BatchNorm2d(cfg.base_width));
  body->push_back(nn::ReLU());
  int width = cfg.base_width;
  for (int stage = 0; stage < cfg.stages(); ++stage) {
    const int out = cfg.base_width << stage;
    for (int b = 0; b < cfg.blocks[stage]; ++b) {
      const int stride = (stage > 0 && b == 0) ? 2 : 1;
      body->push_back(BasicBlock(width, out, stride));
      width = out;
    }
  }
  body_ = register_module("body", body);
}

torch::Tensor ResNetEncoderImpl::forward(const torch::Tensor& x) { return body_->forward(x); }

UpDecoderImpl::UpDecoderImpl(int in_channels, int out_channels, int stages) {
  nn::Sequential body;
  int width = in_channels;
  for (int s = 0; s < stages; ++s) {
    const int out = (s == stages - 1) ? out_channels : std::max(out_channels, width / 2);
    body->push_back(nn::ConvTranspose2d(nn::ConvTranspose2dOptions(width, out, 4).stride(2).padding(1).bias(false)));
    body->push_back(nn::BatchNorm2d(out));
    body->push_back(nn::ReLU());
    width = out;
  }
  body_ = register_module("body", body);
}

torch::Tensor UpDecoderImpl::forward(const torch::Tensor& x) { return body_->forward(x); }

ConvHeadImpl::ConvHeadImpl(int in_channels, int out_channels, bool squash) : squash_(squash) {
  body_ = register_module(
      "body", nn::Sequential(nn::Conv2d(nn::Conv2dOptions(in_channels, in_channels, 3).padding(1)), nn::ReLU(),
                             nn::Conv2d(nn::Conv2dOptions(in_channels, in_channels, 3).padding(1)), nn::ReLU(),
                             nn::Conv2d(nn::Conv2dOptions(in_channels, out_channels, 3).padding(1))));
}

torch::Tensor ConvHeadImpl::forward(const torch::Tensor& x) {
  auto y = body_->forward(x);
  return squash_ ? torch::sigmoid(y) : y;
}

DiscriminatorImpl::DiscriminatorImpl(int in_channels, int image_size, int base_width) : in_channels_(in_channels) {
  nn::Sequential body;
  int side = image_size;
  int width = in_channels;
  int out = base_width;
  while (side > 4 && side % 2 == 0) {
    body->push_back(nn::Conv2d(nn::Conv2dOptions(width, out, 4).stride(2).padding(1)));
    body->push_back(nn::LeakyReLU(nn::LeakyReLUOptions().negative_slope(0.2)));
    width = out;
    out *= 2;
    side /= 2;
  }
  body->push_back(nn::Conv2d(nn::Conv2dOptions(width, 1, side)));
  body_ = register_module("body", body);
}

torch::Tensor DiscriminatorImpl::forward(const torch::Tensor& x) {
  if (x.dim() != 4 || x.size(1) != in_channels_) {
    throw ShapeError("discriminator: expected " + std::to_string(in_channels_) + " input channels");
  }
  return body_->forward(x).flatten();
}

AttentionGeneratorImpl::AttentionGeneratorImpl(const AttentionNetConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  bottleneck_side_ = cfg.image_size / cfg.encoder.downsample();
  const int enc_channels = cfg.encoder.out_channels();
  const int flat = enc_channels * bottleneck_side_ * bottleneck_side_;
  encoder_ = register_module("encoder", ResNetEncoder(cfg.channels, cfg.encoder));
  to_mean_ = register_module("to_mean", nn::Linear(flat, cfg.latent_dim));
  to_logvar_ = register_module("to_logvar", nn::Linear(flat, cfg.latent_dim));
  from_latent_ = register_module("from_latent", nn::Linear(cfg.latent_dim, flat));
  decoder_ = register_module("decoder", UpDecoder(enc_channels, cfg.decoder_width, cfg.encoder.stages()));
  recon_head_ = register_module("recon_head", ConvHead(cfg.decoder_width, cfg.channels, true));
  attn_head_ = register_module("attn_head", ConvHead(cfg.decoder_width, 1, true));
}

void AttentionGeneratorImpl::load_pretrained_encoder() {
  if (cfg_.encoder.pretrained_weights.empty()) return;
  try {
    torch::load(encoder_, cfg_.encoder.pretrained_weights);
  } catch (const c10::Error& e) {
    throw ConfigError("cannot load encoder weights from '" + cfg_.encoder.pretrained_weights + "': " + e.what_without_backtrace());
  }
}

GeneratorOutput AttentionGeneratorImpl::forward(const torch::Tensor& x, const torch::Tensor& eps) {
  check_image_batch(x, "generator input");
  if (x.size(1) != cfg_.channels || x.size(2) != cfg_.image_size || x.size(3) != cfg_.image_size) {
    throw ShapeError("generator: input does not match configured channels/image_size");
  }
  GeneratorOutput out;
  const auto h = encoder_(x).flatten(1);
  out.latent_mean = to_mean_(h);
  out.latent_logvar = to_logvar_(h);
  torch::Tensor z = out.latent_mean;
  if (is_training()) {
    const auto noise = eps.defined() ? eps : torch::randn_like(out.latent_mean);
    z = out.latent_mean + torch::exp(0.5 * out.latent_logvar) * noise;
  }
  const auto enc_channels = cfg_.encoder.out_channels();
  auto trunk = torch::relu(from_latent_(z)).view({-1, enc_channels, bottleneck_side_, bottleneck_side_});
  trunk = decoder_(trunk);
  out.recon = recon_head_(trunk);
  out.attn = attn_head_(trunk);
  return out;
}

torch::Tensor discriminator_logits(Discriminator& disc, const torch::Tensor& img, const torch::Tensor& attn) {
  check_mask_aligned(attn, img, "discriminator");
  return disc(torch::cat({img, attn}, 1));
}

torch::Tensor discriminator_forward(Discriminator& disc, const torch::Tensor& img, const torch::Tensor& attn) {
  return torch::sigmoid(discriminator_logits(disc, img, attn));
}

void seeded_init(torch::nn::Module& module, std::uint64_t seed) {
  torch::NoGradGuard no_grad;
  auto gen = make_generator(seed);
  auto fill = [&](torch::Tensor& t, double bound) {
    t.copy_(torch::rand(t.sizes(), gen, t.options()) * (2.0 * bound) - bound);
  };
  for (auto& m : module.modules(/*include_self=*/true)) {
    if (auto* conv = m->as<nn::Conv2d>()) {
      const double fan_in = static_cast<double>(conv->weight[0].numel());
      const double bound = 1.0 / std::sqrt(fan_in);
      fill(conv->weight, bound);
      if (conv->bias.defined()) fill(conv->bias, bound);
    } else if (auto* tconv = m->as<nn::ConvTranspose2d>()) {
      const double fan_in = static_cast<double>(tconv->weight.size(1) * tconv->weight[0][0].numel());
      const double bound = 1.0 / std::sqrt(fan_in);
      fill(tconv->weight, bound);
      if (tconv->bias.defined()) fill(tconv->bias, bound);
    } else if (auto* lin = m->as<nn::Linear>()) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(lin->weight.size(1)));
      fill(lin->weight, bound);
      if (lin->bias.defined()) fill(lin->bias, bound);
    } else if (auto* bn = m->as<nn::BatchNorm2d>()) {
      bn->weight.fill_(1.0);
      bn->bias.zero_();
      bn->running_mean.zero_();
      bn->running_var.fill_(1.0);
    }
  }
}

}  // namespace attnad::attention
