#include "filagen/metrics.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "filagen/error.hpp"
#include "filagen/skeleton.hpp"

namespace filagen {

using nlohmann::json;

namespace {

void require_same_shape(const BinaryMask& a, const BinaryMask& b, const char* what) {
  if (a.width() != b.width() || a.height() != b.height()) {
    std::ostringstream msg;
    msg << what << ": dimension mismatch " << a.height() << "x" << a.width() << " vs "
        << b.height() << "x" << b.width();
    throw ValidationError(msg.str());
  }
}

std::size_t overlap(const BinaryMask& a, const BinaryMask& b) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < a.size(); ++i) n += (a.data()[i] & b.data()[i]);
  return n;
}

}  // namespace

double iou(const BinaryMask& pred, const BinaryMask& gt) {
  require_same_shape(pred, gt, "iou");
  std::size_t inter = 0;
  std::size_t uni = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    inter += (pred.data()[i] & gt.data()[i]);
    uni += (pred.data()[i] | gt.data()[i]);
  }
  if (uni == 0) return 1.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

double skiou(const BinaryMask& pred, const BinaryMask& gt, int tolerance) {
  require_same_shape(pred, gt, "skiou");
  if (tolerance < 0) throw ValidationError("skiou: tolerance must be >= 0");
  const BinaryMask p = thin(pred);
  const BinaryMask g = thin(gt);
  const std::size_t np = p.count();
  const std::size_t ng = g.count();
  if (np == 0 && ng == 0) return 1.0;
  if (np == 0 || ng == 0) return 0.0;
  const std::size_t matched = overlap(p, dilate(g, tolerance)) + overlap(g, dilate(p, tolerance));
  return static_cast<double>(matched) / static_cast<double>(np + ng);
}

// ---------------------------------------------------------------------------

MetricsReport MetricsReport::assemble(std::vector<ImageScore> scores, Provenance provenance) {
  MetricsReport report;
  std::sort(scores.begin(), scores.end(),
            [](const ImageScore& a, const ImageScore& b) { return a.id < b.id; });
  report.per_image = std::move(scores);
  report.provenance = std::move(provenance);
  if (!report.per_image.empty()) {
    double si = 0.0;
    double ss = 0.0;
    for (const auto& s : report.per_image) {
      si += s.iou;
      ss += s.skiou;
    }
    const auto n = static_cast<double>(report.per_image.size());
    report.mean_iou = si / n;
    report.mean_skiou = ss / n;
  }
  return report;
}

std::string MetricsReport::to_json() const {
  json per = json::array();
  for (const auto& s : per_image) per.push_back({{"id", s.id}, {"iou", s.iou}, {"skiou", s.skiou}});
  json doc{{"per_image", per},
           {"mean_iou", mean_iou},
           {"mean_skiou", mean_skiou},
           {"provenance",
            {{"checkpoint_id", provenance.checkpoint_id},
             {"config_hash", provenance.config_hash},
             {"seed", provenance.seed},
             {"tolerance", provenance.tolerance}}}};
  return doc.dump(2) + "\n";
}

MetricsReport MetricsReport::from_json(const std::string& text) {
  try {
    const json doc = json::parse(text);
    MetricsReport report;
    for (const auto& e : doc.at("per_image")) {
      report.per_image.push_back(
          {e.at("id").get<std::string>(), e.at("iou").get<double>(), e.at("skiou").get<double>()});
    }
    report.mean_iou = doc.at("mean_iou").get<double>();
    report.mean_skiou = doc.at("mean_skiou").get<double>();
    const auto& p = doc.at("provenance");
    report.provenance.checkpoint_id = p.at("checkpoint_id").get<std::string>();
    report.provenance.config_hash = p.at("config_hash").get<std::string>();
    report.provenance.seed = p.at("seed").get<std::uint64_t>();
    report.provenance.tolerance = p.at("tolerance").get<int>();
    return report;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed metrics report: ") + e.what());
  }
}

void MetricsReport::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RuntimeFailure("cannot write report '" + path.string() + "'");
  out << to_json();
  if (!out) throw RuntimeFailure("write failed for report '" + path.string() + "'");
}

MetricsReport MetricsReport::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open report '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return from_json(buffer.str());
}

}  // namespace filagen
