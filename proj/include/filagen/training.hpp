#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "filagen/checkpoint.hpp"
#include "filagen/config.hpp"
#include "filagen/manifest.hpp"
#include "filagen/raster.hpp"

namespace filagen {

struct RunOptions {
  /// Single-threaded math and wall_time fixed at 0 in logs, so two runs with
  /// the same seed write identical bytes.
  bool deterministic = true;
  /// Optional progress sink, one human-readable line per call.
  std::function<void(const std::string&)> progress;
};

/// Applies the thread policy of `options` to torch.
void apply_determinism(const RunOptions& options);

/// One record of the line-delimited JSON training log.
struct GanLogRecord {
  int step = 0;
  double adv_d = 0.0;
  double adv_g = 0.0;
  double l1 = 0.0;
  double struct_term = 0.0;  // written as "struct"
  double wall_time = 0.0;

  std::string to_json() const;
};

struct SegLogRecord {
  int step = 0;
  double bce = 0.0;
  double wall_time = 0.0;

  std::string to_json() const;
};

/// Output layout: `<out>/gan.pt`, `<out>/gan.json`, `<out>/train_log.jsonl`,
/// plus `<out>/gan_step%06d.{pt,json}` at the checkpoint cadence.
struct GanTrainResult {
  GanCheckpoint checkpoint;
  std::filesystem::path checkpoint_path;
  std::filesystem::path log_path;
  std::vector<GanLogRecord> log;
};

struct SegTrainResult {
  SegCheckpoint checkpoint;
  std::filesystem::path checkpoint_path;
  std::filesystem::path log_path;
  std::vector<SegLogRecord> log;
};

/// Loads every train-split pair, cuts patches on the gan.train grid and runs
/// one discriminator step then one generator step per iteration.
GanTrainResult train_gan(const DatasetManifest& manifest, const PipelineConfig& config,
                         const std::filesystem::path& out_dir, const RunOptions& options = {});

/// Same loop over in-memory patch pairs (all of side gan.train.patch_size).
GanTrainResult train_gan(const std::vector<PatchPair>& patches, const PipelineConfig& config,
                         const std::filesystem::path& out_dir, const RunOptions& options = {});

/// Writes G(mask) for every record as `<out_dir>/synth_%06d.png` (index =
/// position in the fragment) and returns the paired fragment.
DatasetManifest synthesize(const GanCheckpoint& checkpoint, const DatasetManifest& masks,
                           const std::filesystem::path& out_dir);

/// Runs the generator over masks; same-size masks matching the patch side.
std::vector<GrayImage> generate_images(const GanCheckpoint& checkpoint, const std::vector<BinaryMask>& masks);

/// Each batch holds ceil(mix_ratio * B) synthetic patches (none when the
/// synthetic set is empty) and real patches for the rest.
SegTrainResult train_seg(const DatasetManifest& real, const DatasetManifest& synthetic,
                         const PipelineConfig& config, const std::filesystem::path& out_dir,
                         const RunOptions& options = {});

SegTrainResult train_seg(const std::vector<PatchPair>& real, const std::vector<PatchPair>& synthetic,
                         const PipelineConfig& config, const std::filesystem::path& out_dir,
                         const RunOptions& options = {});

/// Train-split pairs of the manifest cut into patches (image and mask sizes
/// must agree).
std::vector<PatchPair> load_patch_pairs(const DatasetManifest& manifest, const TrainConfig& train);

}  // namespace filagen
