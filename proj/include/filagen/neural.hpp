#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include <torch/torch.h>

#include "filagen/config.hpp"
#include "filagen/raster.hpp"
#include "filagen/skeleton.hpp"

namespace filagen::nn {

/// Pix2Pix U-Net. Input and output are (N, 1, H, W); output lies in [0, 1].
class GeneratorImpl : public torch::nn::Module {
 public:
  explicit GeneratorImpl(const GeneratorConfig& cfg);
  torch::Tensor forward(const torch::Tensor& mask);
  const GeneratorConfig& config() const { return cfg_; }

 private:
  GeneratorConfig cfg_;
  std::vector<torch::nn::Conv2d> down_;
  std::vector<torch::nn::BatchNorm2d> down_norm_;  // empty holder where a stage has none
  std::vector<torch::nn::ConvTranspose2d> up_;
  std::vector<torch::nn::BatchNorm2d> up_norm_;
};
TORCH_MODULE(Generator);

/// Patch discriminator over cat(mask, image). Returns a logit grid (N, 1, h, w).
class DiscriminatorImpl : public torch::nn::Module {
 public:
  explicit DiscriminatorImpl(const DiscriminatorConfig& cfg);
  torch::Tensor forward(const torch::Tensor& mask, const torch::Tensor& image);
  const DiscriminatorConfig& config() const { return cfg_; }

 private:
  DiscriminatorConfig cfg_;
  torch::nn::Sequential body_;
};
TORCH_MODULE(Discriminator);

/// Segmentation U-Net. `forward` returns logits; `probabilities` applies the sigmoid.
class SegmenterImpl : public torch::nn::Module {
 public:
  explicit SegmenterImpl(const SegmenterConfig& cfg);
  torch::Tensor forward(const torch::Tensor& image);
  torch::Tensor probabilities(const torch::Tensor& image) { return torch::sigmoid(forward(image)); }
  const SegmenterConfig& config() const { return cfg_; }

 private:
  SegmenterConfig cfg_;
  std::vector<torch::nn::Sequential> enc_;
  torch::nn::Sequential bottleneck_{nullptr};
  std::vector<torch::nn::ConvTranspose2d> up_;
  std::vector<torch::nn::Sequential> dec_;
  torch::nn::Conv2d head_{nullptr};
};
TORCH_MODULE(Segmenter);

/// Conv weights ~ N(0, 0.02), norm scales ~ N(1, 0.02), biases zero; drawn
/// from a generator seeded with `seed` so initialization is reproducible.
void init_weights(torch::nn::Module& module, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Differentiable morphology on (N, 1, H, W) tensors, edge-replicated 3x3.

torch::Tensor soft_erode(const torch::Tensor& x);
torch::Tensor soft_dilate(const torch::Tensor& x);
torch::Tensor soft_open(const torch::Tensor& x);
torch::Tensor soft_binarize(const torch::Tensor& x, const MorphParams& params);
torch::Tensor soft_skeleton(const torch::Tensor& x, int iterations);

// ---------------------------------------------------------------------------
// Losses.

struct AdversarialLosses {
  torch::Tensor discriminator;  // mean softplus(-d_real) + mean softplus(d_fake)
  torch::Tensor generator;      // mean softplus(-d_fake)
};

AdversarialLosses adversarial_losses(const torch::Tensor& d_real, const torch::Tensor& d_fake);
/// The generator half alone: mean softplus(-d_fake).
torch::Tensor generator_adversarial_loss(const torch::Tensor& d_fake);
torch::Tensor l1_loss(const torch::Tensor& y, const torch::Tensor& g);
torch::Tensor struct_loss(const torch::Tensor& y, const torch::Tensor& g, const MorphParams& params);

inline double generator_objective(double adv, double l1, double structv, const LossWeights& w) {
  return adv + w.lambda_l1 * l1 + w.lambda_s * structv;
}
inline torch::Tensor generator_objective(const torch::Tensor& adv, const torch::Tensor& l1,
                                         const torch::Tensor& structv, const LossWeights& w) {
  return adv + w.lambda_l1 * l1 + w.lambda_s * structv;
}

// ---------------------------------------------------------------------------
// Raster <-> tensor. Tensors are float32 (1, 1, H, W) unless stated.

torch::Tensor to_tensor(const GrayImage& image);
torch::Tensor to_tensor(const BinaryMask& mask);
/// Stacks same-sized rasters into (N, 1, H, W).
torch::Tensor stack(const std::vector<GrayImage>& images);
torch::Tensor stack(const std::vector<BinaryMask>& masks);
/// Takes a (1, 1, H, W) or (H, W) tensor; values are clamped into [0, 1].
GrayImage to_gray_image(const torch::Tensor& t);

}  // namespace filagen::nn
