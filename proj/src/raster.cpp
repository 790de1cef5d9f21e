#include "filagen/raster.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <sstream>

#include "filagen/error.hpp"

namespace filagen {

namespace {

void check_dimensions(int width, int height) {
  if (width < 0 || height < 0) {
    throw ValidationError("raster dimensions must be nonnegative");
  }
}

std::size_t area(int width, int height) {
  return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
}

void check_crop(int row, int col, int height, int width, int full_height, int full_width) {
  if (row < 0 || col < 0 || height < 0 || width < 0 || row + height > full_height ||
      col + width > full_width) {
    std::ostringstream msg;
    msg << "crop (" << row << "," << col << ") " << height << "x" << width
        << " outside raster " << full_height << "x" << full_width;
    throw ValidationError(msg.str());
  }
}

}  // namespace

GrayImage::GrayImage(int width, int height, double fill)
    : width_(width), height_(height) {
  check_dimensions(width, height);
  if (!(fill >= 0.0 && fill <= 1.0)) {
    throw ValidationError("intensity fill outside [0, 1]");
  }
  data_.assign(area(width, height), fill);
}

GrayImage::GrayImage(int width, int height, std::vector<double> data)
    : width_(width), height_(height), data_(std::move(data)) {
  check_dimensions(width, height);
  if (data_.size() != area(width, height)) {
    throw ValidationError("intensity buffer length does not match width x height");
  }
  for (double v : data_) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw ValidationError("intensity outside [0, 1]");
    }
  }
}

void GrayImage::set(int row, int col, double value) {
  if (!(value >= 0.0 && value <= 1.0)) {
    throw ValidationError("intensity outside [0, 1]");
  }
  data_[index(row, col)] = value;
}

GrayImage GrayImage::crop(int row, int col, int height, int width) const {
  check_crop(row, col, height, width, height_, width_);
  std::vector<double> out;
  out.reserve(area(width, height));
  for (int r = row; r < row + height; ++r) {
    auto begin = data_.begin() + static_cast<std::ptrdiff_t>(index(r, col));
    out.insert(out.end(), begin, begin + width);
  }
  return GrayImage(width, height, std::move(out));
}

BinaryMask::BinaryMask(int width, int height, bool fill) : width_(width), height_(height) {
  check_dimensions(width, height);
  data_.assign(area(width, height), fill ? 1 : 0);
}

BinaryMask::BinaryMask(int width, int height, std::vector<std::uint8_t> data)
    : width_(width), height_(height), data_(std::move(data)) {
  check_dimensions(width, height);
  if (data_.size() != area(width, height)) {
    throw ValidationError("mask buffer length does not match width x height");
  }
  for (auto& v : data_) v = v != 0 ? 1 : 0;
}

std::size_t BinaryMask::count() const noexcept {
  return static_cast<std::size_t>(std::count(data_.begin(), data_.end(), std::uint8_t{1}));
}

double BinaryMask::foreground_fraction() const noexcept {
  if (data_.empty()) return 0.0;
  return static_cast<double>(count()) / static_cast<double>(data_.size());
}

BinaryMask BinaryMask::crop(int row, int col, int height, int width) const {
  check_crop(row, col, height, width, height_, width_);
  std::vector<std::uint8_t> out;
  out.reserve(area(width, height));
  for (int r = row; r < row + height; ++r) {
    auto begin = data_.begin() + static_cast<std::ptrdiff_t>(index(r, col));
    out.insert(out.end(), begin, begin + width);
  }
  return BinaryMask(width, height, std::move(out));
}

GrayImage to_gray(const BinaryMask& mask) {
  std::vector<double> data(mask.size());
  std::transform(mask.data().begin(), mask.data().end(), data.begin(),
                 [](std::uint8_t v) { return v != 0 ? 1.0 : 0.0; });
  return GrayImage(mask.width(), mask.height(), std::move(data));
}

// ---------------------------------------------------------------------------

std::optional<double> otsu_threshold(const GrayImage& image) {
  constexpr int kBins = 256;
  std::array<double, kBins> hist{};
  for (double v : image.data()) {
    int bin = std::min(kBins - 1, static_cast<int>(std::floor(v * kBins)));
    hist[static_cast<std::size_t>(bin)] += 1.0;
  }
  const double total = static_cast<double>(image.size());
  if (total == 0.0) return std::nullopt;
  if (std::count_if(hist.begin(), hist.end(), [](double h) { return h > 0.0; }) < 2) {
    return std::nullopt;
  }

  double sum_all = 0.0;
  for (int k = 0; k < kBins; ++k) sum_all += k * hist[static_cast<std::size_t>(k)];

  double weight_below = 0.0;
  double sum_below = 0.0;
  double best_variance = -1.0;
  int best_bin = 0;
  for (int k = 0; k < kBins - 1; ++k) {
    weight_below += hist[static_cast<std::size_t>(k)];
    sum_below += k * hist[static_cast<std::size_t>(k)];
    const double weight_above = total - weight_below;
    if (weight_below == 0.0 || weight_above == 0.0) continue;
    const double mean_below = sum_below / weight_below;
    const double mean_above = (sum_all - sum_below) / weight_above;
    const double diff = mean_below - mean_above;
    const double variance = weight_below * weight_above * diff * diff;
    if (variance > best_variance) {
      best_variance = variance;
      best_bin = k;
    }
  }
  return static_cast<double>(best_bin + 1) / kBins;
}

BinarizeResult binarize(const GrayImage& image, const ThresholdMethod& method) {
  BinarizeResult result;
  if (const auto* fixed = std::get_if<FixedThreshold>(&method)) {
    if (!(fixed->threshold >= 0.0 && fixed->threshold <= 1.0)) {
      throw ValidationError("fixed threshold outside [0, 1]");
    }
    result.threshold = fixed->threshold;
  } else if (auto t = otsu_threshold(image)) {
    result.threshold = *t;
  } else {
    result.threshold = 0.5;
    result.warnings.emplace_back("otsu: constant image, falling back to fixed threshold 0.5");
  }

  std::vector<std::uint8_t> data(image.size());
  const double t = result.threshold;
  std::transform(image.data().begin(), image.data().end(), data.begin(),
                 [t](double v) -> std::uint8_t { return v > t ? 1 : 0; });
  result.mask = BinaryMask(image.width(), image.height(), std::move(data));
  return result;
}

// ---------------------------------------------------------------------------

std::vector<PatchPair> extract_patches(const GrayImage& image, const BinaryMask& mask,
                                       const PatchGrid& grid, const std::string& source_id) {
  if (image.width() != mask.width() || image.height() != mask.height()) {
    throw ValidationError("image and mask dimensions differ for '" + source_id + "'");
  }
  if (grid.size < 1 || grid.stride < 1) {
    throw ValidationError("patch size and stride must be positive");
  }
  if (grid.size > image.width() || grid.size > image.height()) {
    std::ostringstream msg;
    msg << "patch size " << grid.size << " exceeds image " << image.height() << "x"
        << image.width() << " of '" << source_id << "'";
    throw ValidationError(msg.str());
  }

  std::vector<PatchPair> patches;
  for (int row = 0; row + grid.size <= image.height(); row += grid.stride) {
    for (int col = 0; col + grid.size <= image.width(); col += grid.stride) {
      BinaryMask m = mask.crop(row, col, grid.size, grid.size);
      if (m.foreground_fraction() < grid.min_foreground) continue;
      patches.push_back(PatchPair{image.crop(row, col, grid.size, grid.size), std::move(m),
                                  source_id, PixelOffset{row, col}});
    }
  }
  return patches;
}

}  // namespace filagen
