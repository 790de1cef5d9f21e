#include "filagen/neural.hpp"

#include <ATen/CPUGeneratorImpl.h>

#include <algorithm>

#include "filagen/error.hpp"

namespace filagen::nn {

namespace F = torch::nn::functional;

namespace {

torch::nn::Conv2d conv4(int in, int out, int stride, bool bias) {
  return torch::nn::Conv2d(torch::nn::Conv2dOptions(in, out, 4).stride(stride).padding(1).bias(bias));
}

torch::nn::ConvTranspose2d deconv4(int in, int out, bool bias) {
  return torch::nn::ConvTranspose2d(
      torch::nn::ConvTranspose2dOptions(in, out, 4).stride(2).padding(1).bias(bias));
}

torch::nn::Sequential double_conv(int in, int out) {
  auto conv = [](int a, int b) {
    return torch::nn::Conv2d(torch::nn::Conv2dOptions(a, b, 3).padding(1).bias(false));
  };
  return torch::nn::Sequential(conv(in, out), torch::nn::BatchNorm2d(out), torch::nn::ReLU(),
                               conv(out, out), torch::nn::BatchNorm2d(out), torch::nn::ReLU());
}

}  // namespace

// ---------------------------------------------------------------------------

GeneratorImpl::GeneratorImpl(const GeneratorConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  const int d = cfg_.depth;
  for (int i = 0; i < d; ++i) {
    const int in = i == 0 ? 1 : cfg_.channels(i - 1);
    const bool norm = i != 0 && i != d - 1;
    down_.push_back(register_module("down" + std::to_string(i), conv4(in, cfg_.channels(i), 2, !norm)));
    down_norm_.push_back(norm ? register_module("down_norm" + std::to_string(i),
                                                torch::nn::BatchNorm2d(cfg_.channels(i)))
                              : torch::nn::BatchNorm2d{nullptr});
  }
  // up_[j] maps decoder level j+1 back to the resolution of encoder stage j.
  up_.resize(static_cast<std::size_t>(d), torch::nn::ConvTranspose2d{nullptr});
  up_norm_.resize(static_cast<std::size_t>(d), torch::nn::BatchNorm2d{nullptr});
  for (int j = d - 1; j >= 0; --j) {
    const int in = j == d - 1 ? cfg_.channels(d - 1) : 2 * cfg_.channels(j);
    const int out = j == 0 ? 1 : cfg_.channels(j - 1);
    const auto idx = static_cast<std::size_t>(j);
    up_[idx] = register_module("up" + std::to_string(j), deconv4(in, out, j == 0));
    if (j != 0) up_norm_[idx] = register_module("up_norm" + std::to_string(j), torch::nn::BatchNorm2d(out));
  }
}

torch::Tensor GeneratorImpl::forward(const torch::Tensor& mask) {
  const int d = cfg_.depth;
  if (mask.dim() != 4 || mask.size(1) != 1) throw ValidationError("generator input must be (N, 1, H, W)");
  const int side = 1 << d;
  if (mask.size(2) % side != 0 || mask.size(3) % side != 0) {
    throw ValidationError("generator input sides must be multiples of " + std::to_string(side));
  }
  std::vector<torch::Tensor> skips;
  torch::Tensor x = mask;
  for (int i = 0; i < d; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    if (i > 0) x = F::leaky_relu(x, F::LeakyReLUFuncOptions().negative_slope(0.2));
    x = down_[idx]->forward(x);
    if (down_norm_[idx]) x = down_norm_[idx]->forward(x);
    skips.push_back(x);
  }
  for (int j = d - 1; j >= 0; --j) {
    const auto idx = static_cast<std::size_t>(j);
    x = up_[idx]->forward(torch::relu(x));
    if (j == 0) break;
    x = up_norm_[idx]->forward(x);
    x = torch::cat({x, skips[idx - 1]}, 1);
  }
  return (torch::tanh(x) + 1.0) * 0.5;
}

// ---------------------------------------------------------------------------

DiscriminatorImpl::DiscriminatorImpl(const DiscriminatorConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  auto leaky = [] { return torch::nn::LeakyReLU(torch::nn::LeakyReLUOptions().negative_slope(0.2)); };
  int channels = cfg_.base_channels;
  body_->push_back(conv4(2, channels, 2, true));
  body_->push_back(leaky());
  for (int i = 1; i < cfg_.layers; ++i) {
    const int out = cfg_.base_channels * std::min(1 << i, 8);
    body_->push_back(conv4(channels, out, i == cfg_.layers - 1 ? 1 : 2, false));
    body_->push_back(torch::nn::BatchNorm2d(out));
    body_->push_back(leaky());
    channels = out;
  }
  body_->push_back(conv4(channels, 1, 1, true));
  register_module("body", body_);
}

torch::Tensor DiscriminatorImpl::forward(const torch::Tensor& mask, const torch::Tensor& image) {
  if (!mask.sizes().equals(image.sizes())) throw ValidationError("discriminator inputs differ in shape");
  return body_->forward(torch::cat({mask, image}, 1));
}

// ---------------------------------------------------------------------------

SegmenterImpl::SegmenterImpl(const SegmenterConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  const int b = cfg_.base_channels;
  int in = 1;
  for (int i = 0; i < cfg_.depth; ++i) {
    enc_.push_back(register_module("enc" + std::to_string(i), double_conv(in, b << i)));
    in = b << i;
  }
  bottleneck_ = register_module("bottleneck", double_conv(in, b << cfg_.depth));
  for (int i = cfg_.depth - 1; i >= 0; --i) {
    up_.push_back(register_module(
        "up" + std::to_string(i),
        torch::nn::ConvTranspose2d(torch::nn::ConvTranspose2dOptions(b << (i + 1), b << i, 2).stride(2))));
    dec_.push_back(register_module("dec" + std::to_string(i), double_conv(2 * (b << i), b << i)));
  }
  head_ = register_module("head", torch::nn::Conv2d(torch::nn::Conv2dOptions(b, 1, 1)));
}

torch::Tensor SegmenterImpl::forward(const torch::Tensor& image) {
  const int side = 1 << cfg_.depth;
  if (image.dim() != 4 || image.size(1) != 1 || image.size(2) % side != 0 || image.size(3) % side != 0) {
    throw ValidationError("segmenter input must be (N, 1, H, W) with sides divisible by " +
                          std::to_string(side));
  }
  std::vector<torch::Tensor> skips;
  torch::Tensor x = image;
  for (auto& block : enc_) {
    x = block->forward(x);
    skips.push_back(x);
    x = F::max_pool2d(x, F::MaxPool2dFuncOptions(2));
  }
  x = bottleneck_->forward(x);
  for (std::size_t k = 0; k < up_.size(); ++k) {
    x = up_[k]->forward(x);
    x = dec_[k]->forward(torch::cat({x, skips[skips.size() - 1 - k]}, 1));
  }
  return head_->forward(x);
}

// ---------------------------------------------------------------------------

void init_weights(torch::nn::Module& module, std::uint64_t seed) {
  torch::NoGradGuard no_grad;
  auto gen = at::make_generator<at::CPUGeneratorImpl>(seed);
  for (auto& m : module.modules(/*include_self=*/true)) {
    const bool conv = m->as<torch::nn::Conv2d>() != nullptr || m->as<torch::nn::ConvTranspose2d>() != nullptr;
    const bool norm = m->as<torch::nn::BatchNorm2d>() != nullptr;
    if (!conv && !norm) continue;
    for (auto& p : m->named_parameters(/*recurse=*/false)) {
      if (p.key() == "weight") {
        p.value().normal_(norm ? 1.0 : 0.0, 0.02, gen);
      } else if (p.key() == "bias") {
        p.value().zero_();
      }
    }
  }
}

// ---------------------------------------------------------------------------

namespace {
torch::Tensor replicate_pad(const torch::Tensor& x) {
  return F::pad(x, F::PadFuncOptions({1, 1, 1, 1}).mode(torch::kReplicate));
}
}  // namespace

torch::Tensor soft_erode(const torch::Tensor& x) {
  return -F::max_pool2d(replicate_pad(-x), F::MaxPool2dFuncOptions(3).stride(1));
}

torch::Tensor soft_dilate(const torch::Tensor& x) {
  return F::max_pool2d(replicate_pad(x), F::MaxPool2dFuncOptions(3).stride(1));
}

torch::Tensor soft_open(const torch::Tensor& x) { return soft_dilate(soft_erode(x)); }

torch::Tensor soft_binarize(const torch::Tensor& x, const MorphParams& params) {
  return torch::sigmoid(params.sharpness * (x - params.threshold));
}

torch::Tensor soft_skeleton(const torch::Tensor& x, int iterations) {
  torch::Tensor current = x;
  torch::Tensor skel = torch::relu(current - soft_open(current));
  for (int k = 0; k < iterations; ++k) {
    current = soft_erode(current);
    const torch::Tensor delta = torch::relu(current - soft_open(current));
    skel = skel + torch::relu(delta - skel * delta);
  }
  return skel;
}

AdversarialLosses adversarial_losses(const torch::Tensor& d_real, const torch::Tensor& d_fake) {
  if (!d_real.sizes().equals(d_fake.sizes())) throw ValidationError("logit grids differ in shape");
  return {F::softplus(-d_real).mean() + F::softplus(d_fake).mean(), generator_adversarial_loss(d_fake)};
}

torch::Tensor generator_adversarial_loss(const torch::Tensor& d_fake) { return F::softplus(-d_fake).mean(); }

torch::Tensor l1_loss(const torch::Tensor& y, const torch::Tensor& g) {
  if (!y.sizes().equals(g.sizes())) throw ValidationError("l1_loss: shape mismatch");
  return (y - g).abs().mean();
}

torch::Tensor struct_loss(const torch::Tensor& y, const torch::Tensor& g, const MorphParams& params) {
  if (!y.sizes().equals(g.sizes())) throw ValidationError("struct_loss: shape mismatch");
  const torch::Tensor sy = soft_skeleton(soft_binarize(y, params), params.soft_iterations);
  const torch::Tensor sg = soft_skeleton(soft_binarize(g, params), params.soft_iterations);
  return (sy - sg).abs().mean();
}

// ---------------------------------------------------------------------------

torch::Tensor to_tensor(const GrayImage& image) {
  std::vector<float> values(image.data().begin(), image.data().end());
  return torch::from_blob(values.data(), {1, 1, image.height(), image.width()}, torch::kFloat32).clone();
}

torch::Tensor to_tensor(const BinaryMask& mask) {
  std::vector<float> values(mask.data().begin(), mask.data().end());
  return torch::from_blob(values.data(), {1, 1, mask.height(), mask.width()}, torch::kFloat32).clone();
}

torch::Tensor stack(const std::vector<GrayImage>& images) {
  std::vector<torch::Tensor> parts;
  parts.reserve(images.size());
  for (const auto& img : images) parts.push_back(to_tensor(img));
  return torch::cat(parts, 0);
}

torch::Tensor stack(const std::vector<BinaryMask>& masks) {
  std::vector<torch::Tensor> parts;
  parts.reserve(masks.size());
  for (const auto& m : masks) parts.push_back(to_tensor(m));
  return torch::cat(parts, 0);
}

GrayImage to_gray_image(const torch::Tensor& t) {
  torch::Tensor plane = t.detach().to(torch::kFloat64).contiguous();
  if (plane.dim() == 4) {
    if (plane.size(0) != 1 || plane.size(1) != 1) throw ValidationError("expected a (1, 1, H, W) tensor");
    plane = plane[0][0];
  }
  if (plane.dim() != 2) throw ValidationError("expected a 2-D raster tensor");
  plane = plane.clamp(0.0, 1.0).contiguous();
  const auto h = static_cast<int>(plane.size(0));
  const auto w = static_cast<int>(plane.size(1));
  const double* p = plane.data_ptr<double>();
  return GrayImage(w, h, std::vector<double>(p, p + plane.numel()));
}

}  // namespace filagen::nn
