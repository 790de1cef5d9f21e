#include "filagen/inference.hpp"

#include <algorithm>

#include "filagen/error.hpp"
#include "filagen/montage.hpp"
#include "filagen/neural.hpp"
#include "filagen/png_io.hpp"
#include "filagen/training.hpp"

namespace filagen {

namespace {

constexpr int kTileBatch = 16;

int fold(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  const int m = i % period;
  return m < n ? m : period - m;
}

GrayImage reflect_pad(const GrayImage& image, int height, int width) {
  std::vector<double> data(static_cast<std::size_t>(height) * static_cast<std::size_t>(width));
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      data[static_cast<std::size_t>(r) * width + c] = image.at(fold(r, image.height()), fold(c, image.width()));
    }
  }
  return GrayImage(width, height, std::move(data));
}

std::vector<ManifestRecord> first_by_id(const DatasetManifest& manifest) {
  std::vector<ManifestRecord> records = manifest.records;
  std::sort(records.begin(), records.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  if (records.size() > kMontageMaxRows) records.resize(kMontageMaxRows);
  return records;
}

}  // namespace

std::vector<int> tile_origins(int length, int tile, int stride) {
  if (tile < 1 || stride < 1) throw ValidationError("tile and stride must be positive");
  if (length <= tile) return {0};
  std::vector<int> out;
  for (int o = 0; o + tile < length; o += stride) out.push_back(o);
  out.push_back(length - tile);
  return out;
}

GrayImage predict_probabilities(const ProbabilityFn& fn, int tile, const GrayImage& image) {
  if (image.width() < 1 || image.height() < 1) throw ValidationError("cannot segment an empty image");
  const int h = std::max(image.height(), tile);
  const int w = std::max(image.width(), tile);
  const GrayImage padded = (h == image.height() && w == image.width()) ? image : reflect_pad(image, h, w);
  const int stride = std::max(1, tile / 2);

  std::vector<std::pair<int, int>> origins;
  for (int r : tile_origins(h, tile, stride)) {
    for (int c : tile_origins(w, tile, stride)) origins.emplace_back(r, c);
  }

  std::vector<double> sum(static_cast<std::size_t>(h) * static_cast<std::size_t>(w), 0.0);
  std::vector<int> count(sum.size(), 0);
  torch::NoGradGuard no_grad;
  for (std::size_t start = 0; start < origins.size(); start += kTileBatch) {
    const std::size_t end = std::min(origins.size(), start + kTileBatch);
    std::vector<GrayImage> tiles;
    for (std::size_t k = start; k < end; ++k) {
      tiles.push_back(padded.crop(origins[k].first, origins[k].second, tile, tile));
    }
    const torch::Tensor probs = fn(nn::stack(tiles)).to(torch::kFloat64).contiguous();
    for (std::size_t k = start; k < end; ++k) {
      const double* p = probs[static_cast<std::int64_t>(k - start)][0].data_ptr<double>();
      const auto [r0, c0] = origins[k];
      for (int r = 0; r < tile; ++r) {
        for (int c = 0; c < tile; ++c) {
          const std::size_t i = static_cast<std::size_t>(r0 + r) * w + (c0 + c);
          sum[i] += p[r * tile + c];
          ++count[i];
        }
      }
    }
  }
  std::vector<double> out(static_cast<std::size_t>(image.height()) * static_cast<std::size_t>(image.width()));
  for (int r = 0; r < image.height(); ++r) {
    for (int c = 0; c < image.width(); ++c) {
      const std::size_t i = static_cast<std::size_t>(r) * w + c;
      out[static_cast<std::size_t>(r) * image.width() + c] = std::clamp(sum[i] / count[i], 0.0, 1.0);
    }
  }
  return GrayImage(image.width(), image.height(), std::move(out));
}

BinaryMask predict_seg(const ProbabilityFn& fn, int tile, const GrayImage& image) {
  const GrayImage probs = predict_probabilities(fn, tile, image);
  BinaryMask mask(image.width(), image.height());
  for (int r = 0; r < image.height(); ++r) {
    for (int c = 0; c < image.width(); ++c) mask.set(r, c, probs.at(r, c) > 0.5);
  }
  return mask;
}

BinaryMask predict_seg(const SegCheckpoint& checkpoint, const GrayImage& image) {
  auto S = checkpoint.segmenter;
  S->eval();
  return predict_seg([&](const torch::Tensor& x) { return S->probabilities(x); },
                     checkpoint.config.seg.train.patch_size, image);
}

// ---------------------------------------------------------------------------

MetricsReport evaluate(const Predictor& predict, const DatasetManifest& manifest, const Provenance& provenance) {
  const DatasetManifest test = manifest.filter(Split::kTest);
  if (test.empty()) throw ValidationError("eval: manifest has no test-split records");
  std::vector<ImageScore> scores;
  for (const auto& rec : test.records) {
    if (rec.image.empty()) throw ValidationError("record '" + rec.id + "' has no image");
    const GrayImage image = load_image(rec.image);
    const BinaryMask gt = load_mask(rec.mask);
    if (image.width() != gt.width() || image.height() != gt.height()) {
      throw ValidationError("record '" + rec.id + "': image and mask dimensions differ");
    }
    const BinaryMask pred = predict(image);
    scores.push_back({rec.id, iou(pred, gt), skiou(pred, gt, provenance.tolerance)});
  }
  return MetricsReport::assemble(std::move(scores), provenance);
}

MetricsReport evaluate(const SegCheckpoint& checkpoint, const DatasetManifest& manifest, int tolerance) {
  const Provenance provenance{checkpoint_id("seg", checkpoint.header), checkpoint.header.config_hash,
                              checkpoint.header.seed, tolerance};
  return evaluate([&](const GrayImage& img) { return predict_seg(checkpoint, img); }, manifest, provenance);
}

// ---------------------------------------------------------------------------

GrayImage preview_montage(const DatasetManifest& pairs, const SegCheckpoint* segmenter) {
  const auto records = first_by_id(pairs);
  if (records.empty()) throw ValidationError("preview: nothing to display");
  std::vector<std::vector<GrayImage>> rows;
  for (const auto& rec : records) {
    if (rec.image.empty()) throw ValidationError("preview: record '" + rec.id + "' has no image");
    std::vector<GrayImage> row{to_gray(load_mask(rec.mask)), load_image(rec.image)};
    if (segmenter != nullptr) row.push_back(to_gray(predict_seg(*segmenter, row[1])));
    rows.push_back(std::move(row));
  }
  return compose_montage(rows);
}

GrayImage preview_montage(const GanCheckpoint& generator, const DatasetManifest& masks) {
  const auto records = first_by_id(masks);
  if (records.empty()) throw ValidationError("preview: nothing to display");
  std::vector<BinaryMask> loaded;
  for (const auto& rec : records) loaded.push_back(load_mask(rec.mask));
  const std::vector<GrayImage> images = generate_images(generator, loaded);
  std::vector<std::vector<GrayImage>> rows;
  for (std::size_t i = 0; i < loaded.size(); ++i) rows.push_back({to_gray(loaded[i]), images[i]});
  return compose_montage(rows);
}

}  // namespace filagen
