#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "filagen/manifest.hpp"
#include "filagen/raster.hpp"
#include "filagen/random.hpp"

namespace filagen::testing {

/// Crude fluorescence micrograph for a mask: blurred, saturating filaments
/// over a dim background plus Gaussian read noise, clamped to [0, 1]. Even
/// 1-px filaments peak above 0.5.
GrayImage simulate_fluorescence(const BinaryMask& mask, std::uint64_t seed);

/// Four 64x64 (mask, image) pairs: three filament masks and one empty mask.
std::vector<PatchPair> memorization_pairs(std::uint64_t seed);

/// Writes `count` simulated (image, mask) frames of the given side under
/// `dir` and returns a manifest of real records; the last `test_count`
/// records are in the test split.
DatasetManifest write_real_dataset(const std::filesystem::path& dir, int count, int test_count, int side,
                                   std::uint64_t seed);

}  // namespace filagen::testing
