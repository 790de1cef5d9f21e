#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace filagen {

enum class Origin { kReal, kSynthetic };
enum class Split { kTrain, kTest };

std::string to_string(Origin origin);
std::string to_string(Split split);
Origin parse_origin(const std::string& text);
Split parse_split(const std::string& text);

/// One (image, mask) pair. `image` is empty in mask-only fragments written
/// before synthesis.
struct ManifestRecord {
  std::string id;
  std::filesystem::path image;
  std::filesystem::path mask;
  Origin origin = Origin::kReal;
  Split split = Split::kTrain;

  friend bool operator==(const ManifestRecord&, const ManifestRecord&) = default;
};

/// Dataset listing consumed by training and evaluation.
///
/// On disk: `{"records": [{"id", "image", "mask", "origin", "split"}, ...]}`.
/// Relative paths resolve against the manifest file's directory; `save`
/// writes paths relative to that directory when they live under it.
struct DatasetManifest {
  std::vector<ManifestRecord> records;

  static DatasetManifest load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  DatasetManifest filter(Split split) const;
  DatasetManifest filter(Origin origin) const;
  bool empty() const noexcept { return records.empty(); }

  friend bool operator==(const DatasetManifest&, const DatasetManifest&) = default;
};

/// Which fields `validate_manifest` requires.
enum class ManifestKind {
  kPaired,    // image and mask both present
  kMaskOnly,  // mask required, image optional
};

/// Loads and checks id uniqueness, file existence and image/mask dimension
/// agreement. Every violation is collected and thrown together as a
/// ManifestError. Returns the manifest sorted by id with absolute paths.
DatasetManifest validate_manifest(const std::filesystem::path& path,
                                  ManifestKind kind = ManifestKind::kPaired);

/// Same checks on an in-memory manifest.
DatasetManifest validate_manifest(DatasetManifest manifest,
                                  ManifestKind kind = ManifestKind::kPaired);

}  // namespace filagen
