#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "filagen/config.hpp"
#include "filagen/neural.hpp"

namespace filagen {

/// Sidecar header written next to every parameter payload as `<stem>.json`:
/// `{"config_hash":"…","format_version":1,"seed":N,"step":N}` followed by a
/// newline, keys sorted, no whitespace.
struct CheckpointHeader {
  static constexpr int kFormatVersion = 1;

  std::string config_hash;
  int format_version = kFormatVersion;
  std::uint64_t seed = 0;
  std::int64_t step = 0;

  std::string to_json() const;
  static CheckpointHeader from_json(const std::string& text);

  friend bool operator==(const CheckpointHeader&, const CheckpointHeader&) = default;
};

/// Generator and discriminator with the config that built them.
struct GanCheckpoint {
  PipelineConfig config;
  nn::Generator generator{nullptr};
  nn::Discriminator discriminator{nullptr};
  CheckpointHeader header;

  /// Freshly initialized networks for `config` (seeded from gan.train.seed).
  static GanCheckpoint initialize(const PipelineConfig& config);
};

struct SegCheckpoint {
  PipelineConfig config;
  nn::Segmenter segmenter{nullptr};
  CheckpointHeader header;

  static SegCheckpoint initialize(const PipelineConfig& config);
};

/// `<stem>.pt` holds the parameters, `<stem>.json` the header. `path` may
/// name either file or the bare stem.
void save_checkpoint(const GanCheckpoint& ckpt, const std::filesystem::path& path);
void save_checkpoint(const SegCheckpoint& ckpt, const std::filesystem::path& path);

/// Missing or unreadable files, a kind mismatch, or a header whose hash
/// disagrees with the stored config raise ValidationError naming the path.
GanCheckpoint load_gan_checkpoint(const std::filesystem::path& path);
SegCheckpoint load_seg_checkpoint(const std::filesystem::path& path);

std::filesystem::path checkpoint_payload_path(const std::filesystem::path& path);
std::filesystem::path checkpoint_header_path(const std::filesystem::path& path);

/// Path-free identifier, e.g. "seg-3fa4c1d2e5b6-step1500".
std::string checkpoint_id(const std::string& kind, const CheckpointHeader& header);

}  // namespace filagen
