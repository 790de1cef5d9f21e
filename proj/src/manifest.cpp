#include "filagen/manifest.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <optional>

#include <json.hpp>

#include "filagen/error.hpp"
#include "filagen/png_io.hpp"

namespace filagen {

namespace fs = std::filesystem;
using nlohmann::json;

std::string to_string(Origin origin) { return origin == Origin::kReal ? "real" : "synthetic"; }

std::string to_string(Split split) { return split == Split::kTrain ? "train" : "test"; }

Origin parse_origin(const std::string& text) {
  if (text == "real") return Origin::kReal;
  if (text == "synthetic") return Origin::kSynthetic;
  throw ValidationError("unknown origin '" + text + "' (expected real|synthetic)");
}

Split parse_split(const std::string& text) {
  if (text == "train") return Split::kTrain;
  if (text == "test") return Split::kTest;
  throw ValidationError("unknown split '" + text + "' (expected train|test)");
}

DatasetManifest DatasetManifest::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open manifest '" + path.string() + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ValidationError("manifest '" + path.string() + "' is not valid JSON: " + e.what());
  }
  if (!doc.is_object() || !doc.contains("records") || !doc["records"].is_array()) {
    throw ValidationError("manifest '" + path.string() + "' lacks a 'records' array");
  }

  const fs::path base = path.parent_path();
  auto resolve = [&](const std::string& p) -> fs::path {
    if (p.empty()) return {};
    fs::path candidate(p);
    return candidate.is_absolute() ? candidate : (base / candidate).lexically_normal();
  };

  DatasetManifest manifest;
  std::size_t index = 0;
  for (const auto& entry : doc["records"]) {
    const std::string where = "records[" + std::to_string(index++) + "]";
    try {
      ManifestRecord record;
      record.id = entry.at("id").get<std::string>();
      record.image = resolve(entry.value("image", std::string{}));
      record.mask = resolve(entry.at("mask").get<std::string>());
      record.origin = parse_origin(entry.value("origin", std::string{"real"}));
      record.split = parse_split(entry.value("split", std::string{"train"}));
      manifest.records.push_back(std::move(record));
    } catch (const json::exception& e) {
      throw ValidationError("manifest '" + path.string() + "' " + where + ": " + e.what());
    }
  }
  return manifest;
}

void DatasetManifest::save(const fs::path& path) const {
  const fs::path base = fs::absolute(path).parent_path();
  auto relativize = [&](const fs::path& p) -> std::string {
    if (p.empty()) return {};
    const fs::path abs = fs::absolute(p).lexically_normal();
    const fs::path rel = abs.lexically_relative(base);
    if (!rel.empty() && *rel.begin() != "..") return rel.generic_string();
    return abs.generic_string();
  };

  json records = json::array();
  for (const auto& r : this->records) {
    records.push_back({{"id", r.id},
                       {"image", relativize(r.image)},
                       {"mask", relativize(r.mask)},
                       {"origin", to_string(r.origin)},
                       {"split", to_string(r.split)}});
  }
  std::ofstream out(path);
  if (!out) throw RuntimeFailure("cannot write manifest '" + path.string() + "'");
  out << json{{"records", records}}.dump(2) << '\n';
  if (!out) throw RuntimeFailure("write failed for manifest '" + path.string() + "'");
}

DatasetManifest DatasetManifest::filter(Split split) const {
  DatasetManifest out;
  std::copy_if(records.begin(), records.end(), std::back_inserter(out.records),
               [split](const ManifestRecord& r) { return r.split == split; });
  return out;
}

DatasetManifest DatasetManifest::filter(Origin origin) const {
  DatasetManifest out;
  std::copy_if(records.begin(), records.end(), std::back_inserter(out.records),
               [origin](const ManifestRecord& r) { return r.origin == origin; });
  return out;
}

DatasetManifest validate_manifest(const fs::path& path, ManifestKind kind) {
  DatasetManifest manifest;
  try {
    manifest = DatasetManifest::load(path);
  } catch (const ManifestError&) {
    throw;
  } catch (const ValidationError& e) {
    throw ManifestError(std::vector<ManifestError::Issue>{{"<manifest>", e.what()}});
  }
  return validate_manifest(std::move(manifest), kind);
}

DatasetManifest validate_manifest(DatasetManifest manifest, ManifestKind kind) {
  std::vector<ManifestError::Issue> issues;
  std::map<std::string, int> seen;
  for (const auto& r : manifest.records) {
    if (r.id.empty()) issues.push_back({"<empty>", "record id is empty"});
    if (++seen[r.id] == 2) issues.push_back({r.id, "duplicate id"});
  }

  for (auto& r : manifest.records) {
    std::optional<RasterSize> image_size;
    std::optional<RasterSize> mask_size;
    if (r.image.empty()) {
      if (kind == ManifestKind::kPaired) issues.push_back({r.id, "missing image path"});
    } else if (!fs::exists(r.image)) {
      issues.push_back({r.id, "image not found: " + r.image.string()});
    } else {
      try {
        image_size = png_size(r.image);
      } catch (const DecodeError& e) {
        issues.push_back({r.id, e.what()});
      }
    }
    if (r.mask.empty()) {
      issues.push_back({r.id, "missing mask path"});
    } else if (!fs::exists(r.mask)) {
      issues.push_back({r.id, "mask not found: " + r.mask.string()});
    } else {
      try {
        mask_size = png_size(r.mask);
      } catch (const DecodeError& e) {
        issues.push_back({r.id, e.what()});
      }
    }
    if (image_size && mask_size && !(*image_size == *mask_size)) {
      issues.push_back({r.id, "image " + std::to_string(image_size->height) + "x" +
                                  std::to_string(image_size->width) + " vs mask " +
                                  std::to_string(mask_size->height) + "x" +
                                  std::to_string(mask_size->width)});
    }
    if (!r.image.empty()) r.image = fs::absolute(r.image).lexically_normal();
    if (!r.mask.empty()) r.mask = fs::absolute(r.mask).lexically_normal();
  }

  if (!issues.empty()) throw ManifestError(std::move(issues));
  std::sort(manifest.records.begin(), manifest.records.end(),
            [](const ManifestRecord& a, const ManifestRecord& b) { return a.id < b.id; });
  return manifest;
}

}  // namespace filagen
