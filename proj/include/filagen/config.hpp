#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "filagen/maskgen.hpp"
#include "filagen/skeleton.hpp"

namespace filagen {

/// Pix2Pix U-Net generator: `depth` stride-2 encoder/decoder stages.
struct GeneratorConfig {
  int depth = 8;
  int base_channels = 64;

  /// Channel width of encoder stage i: base * min(2^i, 8).
  int channels(int stage) const;
  /// Throws ConfigError unless patch side is a positive multiple of 2^depth.
  void validate_patch(int patch_size) const;
  void validate() const;

  friend bool operator==(const GeneratorConfig&, const GeneratorConfig&) = default;
};

/// Patch discriminator over the (mask, image) pair. `layers` feature stages
/// (all stride 2 except the last, which is stride 1), then a stride-1
/// one-channel classifier. Kernel 4, padding 1 throughout.
struct DiscriminatorConfig {
  int layers = 4;
  int base_channels = 64;

  int receptive_field() const;
  /// Side length of the logit grid for a square input of the given side.
  int output_size(int input_size) const;
  void validate() const;

  friend bool operator==(const DiscriminatorConfig&, const DiscriminatorConfig&) = default;
};

/// Segmentation U-Net: double 3x3 conv blocks, `depth` 2x2 max-pool
/// downsamplings, sigmoid output.
struct SegmenterConfig {
  int depth = 4;
  int base_channels = 64;

  void validate_patch(int patch_size) const;
  void validate() const;

  friend bool operator==(const SegmenterConfig&, const SegmenterConfig&) = default;
};

struct LossWeights {
  double lambda_l1 = 50.0;
  double lambda_s = 5.0;
  friend bool operator==(const LossWeights&, const LossWeights&) = default;
};

struct TrainConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  int batch_size = 64;
  int steps = 20000;
  int patch_size = 256;
  /// Patch-grid stride; 0 means equal to patch_size.
  int patch_stride = 0;
  double min_foreground = 0.0;
  std::uint64_t seed = 0;
  LossWeights loss_weights;
  MorphParams morph;
  /// Synthetic fraction per segmentation batch.
  double mix_ratio = 0.5;
  /// Random flips and 90-degree rotations (segmentation).
  bool augment = true;
  int log_every = 10;
  /// 0 disables intermediate checkpoints; the final one is always written.
  int checkpoint_every = 0;

  int stride() const { return patch_stride > 0 ? patch_stride : patch_size; }
  /// `section` prefixes field paths in errors, e.g. "gan.train".
  void validate(const std::string& section) const;

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

struct GanSection {
  GeneratorConfig generator;
  DiscriminatorConfig discriminator;
  TrainConfig train;
  friend bool operator==(const GanSection&, const GanSection&) = default;
};

struct SegSection {
  SegmenterConfig network;
  TrainConfig train;
  friend bool operator==(const SegSection&, const SegSection&) = default;
};

struct PipelineConfig {
  MaskGenConfig maskgen;
  /// Number of synthetic masks (and images) in the generated corpus.
  std::size_t mask_count = 50000;
  GanSection gan;
  SegSection seg;
  int tolerance = 2;
  std::filesystem::path workdir;
  std::filesystem::path real_manifest;

  /// Full-scale profile: 256 px patches, depth-8 generator, batch 64.
  static PipelineConfig full_scale();
  /// Reduced profile: 64 px patches, depth-6 generator, batch 4, 16 base
  /// channels, 64-mask corpus.
  static PipelineConfig desk_scale();

  /// Forces the desk-scale geometry (patch size, depths, widths, batch,
  /// canvas) while keeping the remaining fields.
  void apply_desk_scale();

  /// Sets every seed (maskgen, GAN, segmenter).
  void set_seed(std::uint64_t seed);

  void validate() const;

  std::string to_json() const;
  /// Strict parse: unknown keys and type errors raise ConfigError with the
  /// dotted field path. Missing keys keep the values of `base`.
  static PipelineConfig from_json(const std::string& text, const PipelineConfig& base);
  static PipelineConfig load(const std::filesystem::path& path, const PipelineConfig& base);

  /// SHA-256 of the canonical serialization (sorted keys, no whitespace),
  /// paths excluded.
  std::string hash() const;

  friend bool operator==(const PipelineConfig&, const PipelineConfig&) = default;
};

/// Canonical JSON hash of any sub-config serialized by `to_json`.
std::string canonical_hash(const std::string& json_text);

}  // namespace filagen
