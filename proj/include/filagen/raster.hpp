#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace filagen {

/// Row-major raster of normalized intensities in [0, 1].
///
/// Holds both real micrographs and generator outputs. The constructor that
/// takes a data vector validates range and length; `set` rejects values
/// outside [0, 1].
class GrayImage {
 public:
  GrayImage() = default;
  GrayImage(int width, int height, double fill = 0.0);
  GrayImage(int width, int height, std::vector<double> data);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double at(int row, int col) const { return data_[index(row, col)]; }
  void set(int row, int col, double value);

  std::span<const double> data() const noexcept { return data_; }

  GrayImage crop(int row, int col, int height, int width) const;

  friend bool operator==(const GrayImage&, const GrayImage&) = default;

 private:
  std::size_t index(int row, int col) const {
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(col);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<double> data_;
};

/// Row-major boolean raster: annotations, generated masks and skeletons.
class BinaryMask {
 public:
  BinaryMask() = default;
  BinaryMask(int width, int height, bool fill = false);
  BinaryMask(int width, int height, std::vector<std::uint8_t> data);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }

  bool at(int row, int col) const { return data_[index(row, col)] != 0; }
  void set(int row, int col, bool value) { data_[index(row, col)] = value ? 1 : 0; }

  /// Out-of-image reads return false.
  bool at_or_false(int row, int col) const {
    return row >= 0 && col >= 0 && row < height_ && col < width_ && at(row, col);
  }

  std::span<const std::uint8_t> data() const noexcept { return data_; }

  std::size_t count() const noexcept;
  double foreground_fraction() const noexcept;

  BinaryMask crop(int row, int col, int height, int width) const;

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

 private:
  std::size_t index(int row, int col) const {
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(col);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> data_;
};

/// Mask rendered as a 0/1 intensity image.
GrayImage to_gray(const BinaryMask& mask);

struct PixelOffset {
  int row = 0;
  int col = 0;
  friend bool operator==(const PixelOffset&, const PixelOffset&) = default;
};

/// Co-registered image/mask crop of the configured patch size.
struct PatchPair {
  GrayImage image;
  BinaryMask mask;
  std::string source_id;
  PixelOffset offset;
};

// ---------------------------------------------------------------------------
// Binarization

struct FixedThreshold {
  double threshold = 0.5;
};
struct OtsuThreshold {};
using ThresholdMethod = std::variant<FixedThreshold, OtsuThreshold>;

struct BinarizeResult {
  BinaryMask mask;
  double threshold = 0.5;
  /// Non-fatal diagnostics, e.g. Otsu falling back on a constant image.
  std::vector<std::string> warnings;
};

/// Pixel is foreground iff intensity > threshold.
BinarizeResult binarize(const GrayImage& image, const ThresholdMethod& method);

/// Otsu over a 256-bin histogram. Returns the threshold separating the two
/// classes, or nothing when the histogram has a single occupied bin.
std::optional<double> otsu_threshold(const GrayImage& image);

// ---------------------------------------------------------------------------
// Patch extraction

struct PatchGrid {
  int size = 256;
  int stride = 256;
  /// Patches whose mask foreground fraction is below this are dropped.
  double min_foreground = 0.0;
};

/// Grid-aligned crops anchored at (0, 0); residual borders are dropped.
std::vector<PatchPair> extract_patches(const GrayImage& image, const BinaryMask& mask,
                                       const PatchGrid& grid, const std::string& source_id = {});

}  // namespace filagen
