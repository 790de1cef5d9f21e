#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "filagen/raster.hpp"

namespace filagen {

/// |pred ∩ gt| / |pred ∪ gt|; 1.0 when both are empty.
double iou(const BinaryMask& pred, const BinaryMask& gt);

/// Tolerance-dilated skeleton overlap. With P = thin(pred), G = thin(gt):
///   (|P ∩ dilate(G, r)| + |G ∩ dilate(P, r)|) / (|P| + |G|)
/// 1.0 when both skeletons are empty, 0.0 when exactly one is.
double skiou(const BinaryMask& pred, const BinaryMask& gt, int tolerance = 2);

struct ImageScore {
  std::string id;
  double iou = 0.0;
  double skiou = 0.0;
  friend bool operator==(const ImageScore&, const ImageScore&) = default;
};

struct Provenance {
  std::string checkpoint_id;
  std::string config_hash;
  std::uint64_t seed = 0;
  int tolerance = 2;
  friend bool operator==(const Provenance&, const Provenance&) = default;
};

/// Per-image and aggregate scores. `per_image` is kept sorted by id; means
/// are unweighted averages.
struct MetricsReport {
  std::vector<ImageScore> per_image;
  double mean_iou = 0.0;
  double mean_skiou = 0.0;
  Provenance provenance;

  /// Sorts per_image by id and recomputes both means.
  static MetricsReport assemble(std::vector<ImageScore> scores, Provenance provenance);

  std::string to_json() const;
  static MetricsReport from_json(const std::string& text);

  void save(const std::filesystem::path& path) const;
  static MetricsReport load(const std::filesystem::path& path);

  friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

}  // namespace filagen
