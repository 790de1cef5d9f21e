#include "filagen/maskgen.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <numbers>
#include <thread>

#include "filagen/error.hpp"
#include "filagen/png_io.hpp"

namespace filagen {

namespace fs = std::filesystem;

std::string to_string(FilamentPreset preset) {
  return preset == FilamentPreset::kMicrotubule ? "microtubule-like" : "actin-like";
}

FilamentPreset parse_preset(const std::string& text) {
  if (text == "microtubule-like") return FilamentPreset::kMicrotubule;
  if (text == "actin-like") return FilamentPreset::kActin;
  throw ConfigError("maskgen.preset", "unknown preset '" + text +
                                          "' (expected microtubule-like|actin-like)");
}

MaskGenConfig MaskGenConfig::for_preset(FilamentPreset preset, std::uint64_t seed) {
  MaskGenConfig cfg;
  cfg.preset = preset;
  cfg.seed = seed;
  cfg.count = preset == FilamentPreset::kMicrotubule ? Range<int>{10, 40} : Range<int>{40, 120};
  return cfg;
}

MaskGenConfig MaskGenConfig::for_preset(FilamentPreset preset, int height, int width,
                                        std::uint64_t seed) {
  MaskGenConfig cfg = for_preset(preset, seed);
  const double scale = static_cast<double>(height) * width / (256.0 * 256.0);
  cfg.height = height;
  cfg.width = width;
  cfg.count.min = std::max(1, static_cast<int>(std::lround(cfg.count.min * scale)));
  cfg.count.max = std::max(cfg.count.min, static_cast<int>(std::lround(cfg.count.max * scale)));
  return cfg;
}

void MaskGenConfig::validate() const {
  if (height < 1) throw ConfigError("maskgen.height", "must be >= 1");
  if (width < 1) throw ConfigError("maskgen.width", "must be >= 1");
  if (count.min < 0 || count.min > count.max) {
    throw ConfigError("maskgen.count_range", "must satisfy 0 <= min <= max");
  }
  if (!(step_length > 0.0)) throw ConfigError("maskgen.step_length", "must be > 0");
  if (length.min < 1 || length.min > length.max) {
    throw ConfigError("maskgen.length_range", "must satisfy 1 <= min <= max");
  }
  if (!(max_turn >= 0.0 && max_turn < std::numbers::pi)) {
    throw ConfigError("maskgen.max_turn", "must lie in [0, pi)");
  }
  if (!(thickness.min >= 1.0 && thickness.min <= thickness.max)) {
    throw ConfigError("maskgen.thickness_range", "must satisfy 1 <= min <= max");
  }
}

double MaskGenConfig::max_foreground_fraction() const {
  // A stroked segment is a convex stadium of area s*d + pi*d^2/4 and
  // perimeter 2s + pi*d; a convex set holds fewer than A + P/2 + 1 lattice
  // points (Bokowski-Hadwiger-Wills).
  const double s = step_length;
  const double d = thickness.max;
  const double area = s * d + std::numbers::pi * d * d / 4.0;
  const double perimeter = 2.0 * s + std::numbers::pi * d;
  const double per_segment = area + perimeter / 2.0 + 1.0;
  const double bound = static_cast<double>(count.max) * length.max * per_segment;
  return std::min(1.0, bound / (static_cast<double>(height) * width));
}

FilamentPolyline sample_filament(Rng& rng, const MaskGenConfig& cfg) {
  const double margin = cfg.step_length;
  const double row_lo = std::min(margin, cfg.height / 2.0);
  const double col_lo = std::min(margin, cfg.width / 2.0);
  const double row_hi = std::max(row_lo, cfg.height - 1.0 - margin);
  const double col_hi = std::max(col_lo, cfg.width - 1.0 - margin);

  FilamentPolyline filament;
  Point p{rng.uniform(row_lo, row_hi), rng.uniform(col_lo, col_hi)};
  double heading = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const auto steps = rng.uniform_int(cfg.length.min, cfg.length.max);

  filament.points.reserve(static_cast<std::size_t>(steps) + 1);
  filament.points.push_back(p);
  for (std::int64_t s = 0; s < steps; ++s) {
    heading += rng.uniform(-cfg.max_turn, cfg.max_turn);
    p.row += cfg.step_length * std::sin(heading);
    p.col += cfg.step_length * std::cos(heading);
    filament.points.push_back(p);
  }
  filament.thickness = rng.uniform(cfg.thickness.min, cfg.thickness.max);
  return filament;
}

namespace {

double distance_to_segment(double r, double c, const Point& a, const Point& b) {
  const double dr = b.row - a.row;
  const double dc = b.col - a.col;
  const double len2 = dr * dr + dc * dc;
  double t = len2 > 0.0 ? ((r - a.row) * dr + (c - a.col) * dc) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double pr = a.row + t * dr - r;
  const double pc = a.col + t * dc - c;
  return std::sqrt(pr * pr + pc * pc);
}

void stroke_segment(BinaryMask& mask, const Point& a, const Point& b, double thickness) {
  const double radius = thickness / 2.0;
  const double reach = radius + 1e-9;
  const int r0 = std::max(0, static_cast<int>(std::ceil(std::min(a.row, b.row) - reach)));
  const int r1 = std::min(mask.height() - 1, static_cast<int>(std::floor(std::max(a.row, b.row) + reach)));
  const int c0 = std::max(0, static_cast<int>(std::ceil(std::min(a.col, b.col) - reach)));
  const int c1 = std::min(mask.width() - 1, static_cast<int>(std::floor(std::max(a.col, b.col) + reach)));
  for (int r = r0; r <= r1; ++r) {
    for (int c = c0; c <= c1; ++c) {
      if (distance_to_segment(r, c, a, b) <= reach) mask.set(r, c, true);
    }
  }
}

}  // namespace

BinaryMask render_mask(const std::vector<FilamentPolyline>& filaments, int height, int width) {
  if (height < 1 || width < 1) throw ValidationError("canvas must be positive");
  BinaryMask mask(width, height);
  for (const auto& f : filaments) {
    if (f.points.size() == 1) stroke_segment(mask, f.points[0], f.points[0], f.thickness);
    for (std::size_t i = 1; i < f.points.size(); ++i) {
      stroke_segment(mask, f.points[i - 1], f.points[i], f.thickness);
    }
  }
  return mask;
}

BinaryMask generate_mask(const MaskGenConfig& cfg, std::uint64_t index) {
  Rng rng(child_seed(cfg.seed, index));
  const auto count = rng.uniform_int(cfg.count.min, cfg.count.max);
  std::vector<FilamentPolyline> filaments;
  filaments.reserve(static_cast<std::size_t>(count));
  for (std::int64_t i = 0; i < count; ++i) filaments.push_back(sample_filament(rng, cfg));
  return render_mask(filaments, cfg.height, cfg.width);
}

std::string mask_filename(std::uint64_t index) {
  char name[32];
  std::snprintf(name, sizeof name, "mask_%06llu.png", static_cast<unsigned long long>(index));
  return name;
}

DatasetManifest generate_mask_corpus(const MaskGenConfig& cfg, std::size_t n,
                                     const fs::path& out_dir, int workers) {
  cfg.validate();
  DatasetManifest fragment;
  if (n == 0) return fragment;

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw RuntimeFailure("cannot create '" + out_dir.string() + "': " + ec.message());

  workers = std::clamp(workers, 1, static_cast<int>(std::min<std::size_t>(n, 256)));
  std::atomic<std::size_t> written{0};
  std::mutex failure_mutex;
  std::string failure;
  std::atomic<bool> failed{false};

  auto work = [&](int worker) {
    for (std::size_t i = static_cast<std::size_t>(worker); i < n && !failed;
         i += static_cast<std::size_t>(workers)) {
      try {
        save_mask(out_dir / mask_filename(i), generate_mask(cfg, i));
        ++written;
      } catch (const std::exception& e) {
        std::lock_guard lock(failure_mutex);
        if (!failed.exchange(true)) failure = e.what();
      }
    }
  };

  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work, w);
  }
  if (failed) {
    throw RuntimeFailure("mask corpus aborted after " + std::to_string(written.load()) + " of " +
                         std::to_string(n) + " masks written to '" + out_dir.string() +
                         "': " + failure);
  }

  fragment.records.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "synth_%06zu", i);
    fragment.records.push_back(
        ManifestRecord{id, {}, out_dir / mask_filename(i), Origin::kSynthetic, Split::kTrain});
  }
  return fragment;
}

}  // namespace filagen
