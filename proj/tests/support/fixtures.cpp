#include "support/fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "filagen/maskgen.hpp"
#include "filagen/png_io.hpp"

namespace filagen::testing {

namespace {

// Separable [1 2 1]/4 smoothing with clamped borders.
std::vector<double> smooth(const std::vector<double>& in, int w, int h) {
  std::vector<double> tmp(in.size()), out(in.size());
  auto at = [&](const std::vector<double>& v, int r, int c) {
    r = std::clamp(r, 0, h - 1);
    c = std::clamp(c, 0, w - 1);
    return v[static_cast<std::size_t>(r) * w + c];
  };
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) tmp[static_cast<std::size_t>(r) * w + c] = (at(in, r, c - 1) + 2 * at(in, r, c) + at(in, r, c + 1)) / 4;
  }
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) out[static_cast<std::size_t>(r) * w + c] = (at(tmp, r - 1, c) + 2 * at(tmp, r, c) + at(tmp, r + 1, c)) / 4;
  }
  return out;
}

double gaussian(Rng& rng) {
  const double u1 = 1.0 - rng.uniform01();
  const double u2 = rng.uniform01();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace

GrayImage simulate_fluorescence(const BinaryMask& mask, std::uint64_t seed) {
  const int w = mask.width();
  const int h = mask.height();
  std::vector<double> v(mask.data().begin(), mask.data().end());
  v = smooth(smooth(v, w, h), w, h);
  Rng rng(seed);
  for (auto& x : v) x = std::clamp(0.08 + 0.8 * std::min(1.0, 1.6 * x) + 0.02 * gaussian(rng), 0.0, 1.0);
  return GrayImage(w, h, std::move(v));
}

std::vector<PatchPair> memorization_pairs(std::uint64_t seed) {
  const MaskGenConfig cfg = MaskGenConfig::for_preset(FilamentPreset::kMicrotubule, 64, 64, seed);
  std::vector<PatchPair> pairs;
  for (std::uint64_t i = 0; i < 4; ++i) {
    const BinaryMask mask = i < 3 ? generate_mask(cfg, i) : BinaryMask(64, 64);
    pairs.push_back({simulate_fluorescence(mask, child_seed(seed, 100 + i)), mask, "pair_" + std::to_string(i), {}});
  }
  return pairs;
}

DatasetManifest write_real_dataset(const std::filesystem::path& dir, int count, int test_count, int side,
                                   std::uint64_t seed) {
  std::filesystem::create_directories(dir);
  const MaskGenConfig cfg = MaskGenConfig::for_preset(FilamentPreset::kMicrotubule, side, side, seed);
  DatasetManifest m;
  for (int i = 0; i < count; ++i) {
    const BinaryMask mask = generate_mask(cfg, static_cast<std::uint64_t>(i));
    const GrayImage image = simulate_fluorescence(mask, child_seed(seed, 1000 + static_cast<std::uint64_t>(i)));
    char id[32];
    std::snprintf(id, sizeof id, "real_%03d", i);
    const auto image_path = dir / (std::string(id) + "_image.png");
    const auto mask_path = dir / (std::string(id) + "_mask.png");
    save_image(image_path, image);
    save_mask(mask_path, mask);
    m.records.push_back({id, image_path, mask_path, Origin::kReal, i >= count - test_count ? Split::kTest : Split::kTrain});
  }
  return m;
}

}  // namespace filagen::testing
