#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "filagen/manifest.hpp"
#include "filagen/random.hpp"
#include "filagen/raster.hpp"

namespace filagen {

struct Point {
  double row = 0.0;
  double col = 0.0;
  friend bool operator==(const Point&, const Point&) = default;
};

/// Ordered control points swept by a disc pen of diameter `thickness`.
struct FilamentPolyline {
  std::vector<Point> points;
  double thickness = 1.0;

  friend bool operator==(const FilamentPolyline&, const FilamentPolyline&) = default;
};

template <typename T>
struct Range {
  T min{};
  T max{};
  friend bool operator==(const Range&, const Range&) = default;
};

enum class FilamentPreset { kMicrotubule, kActin };

std::string to_string(FilamentPreset preset);
FilamentPreset parse_preset(const std::string& text);

struct MaskGenConfig {
  int height = 256;
  int width = 256;
  Range<int> count{10, 40};
  double step_length = 4.0;
  /// Walk length in steps.
  Range<int> length{10, 60};
  /// Max heading change per step, radians.
  double max_turn = 0.3;
  Range<double> thickness{1.0, 3.0};
  std::uint64_t seed = 0;
  FilamentPreset preset = FilamentPreset::kMicrotubule;

  /// Default geometry for a 256x256 canvas. Presets differ only in the
  /// filament count range: microtubule-like [10, 40], actin-like [40, 120].
  static MaskGenConfig for_preset(FilamentPreset preset, std::uint64_t seed = 0);

  /// Same preset on a different canvas, count range scaled by area.
  static MaskGenConfig for_preset(FilamentPreset preset, int height, int width,
                                  std::uint64_t seed = 0);

  /// Throws ConfigError naming the offending field.
  void validate() const;

  /// Upper bound on foreground fraction of any rendered mask.
  double max_foreground_fraction() const;

  friend bool operator==(const MaskGenConfig&, const MaskGenConfig&) = default;
};

/// Correlated random walk: uniform start inside a step-length margin,
/// uniform heading, per-step heading increments in [-max_turn, max_turn].
FilamentPolyline sample_filament(Rng& rng, const MaskGenConfig& cfg);

/// Union of disc-pen strokes, clipped to the canvas. A pixel is set when
/// its center lies within thickness/2 of a segment.
BinaryMask render_mask(const std::vector<FilamentPolyline>& filaments, int height, int width);

/// Mask `index` of the corpus described by cfg; uses the child stream
/// seeded with child_seed(cfg.seed, index).
BinaryMask generate_mask(const MaskGenConfig& cfg, std::uint64_t index);

std::string mask_filename(std::uint64_t index);

/// Writes `mask_{index:06}.png` for index in [0, n) into out_dir and
/// returns the mask-only manifest fragment (origin synthetic, split train,
/// id `synth_{index:06}`). Workers split indices round-robin; output does
/// not depend on the worker count. On I/O failure throws RuntimeFailure
/// listing how many masks were written.
DatasetManifest generate_mask_corpus(const MaskGenConfig& cfg, std::size_t n,
                                     const std::filesystem::path& out_dir, int workers = 1);

}  // namespace filagen
