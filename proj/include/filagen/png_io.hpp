#pragma once

#include <filesystem>

#include "filagen/raster.hpp"

namespace filagen {

enum class BitDepthPolicy {
  kAny,        // accept 8- or 16-bit samples
  kRequire8,
  kRequire16,
};

struct RasterSize {
  int width = 0;
  int height = 0;
  friend bool operator==(const RasterSize&, const RasterSize&) = default;
};

/// Decodes an 8- or 16-bit PNG and normalizes by 2^depth - 1. Gray+alpha
/// drops alpha; RGB(A) is converted by unweighted channel average.
/// Throws DecodeError naming the path.
GrayImage load_image(const std::filesystem::path& path,
                     BitDepthPolicy policy = BitDepthPolicy::kAny);

/// Any sample >= 128 (8-bit scale) is foreground.
BinaryMask load_mask(const std::filesystem::path& path);

/// Reads only the header.
RasterSize png_size(const std::filesystem::path& path);

/// 8-bit grayscale, round(i * 255).
void save_image(const std::filesystem::path& path, const GrayImage& image);

/// 8-bit grayscale, values exactly 0 or 255.
void save_mask(const std::filesystem::path& path, const BinaryMask& mask);

/// 16-bit grayscale, round(i * 65535).
void save_image16(const std::filesystem::path& path, const GrayImage& image);

}  // namespace filagen
