#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include <torch/torch.h>

#include "filagen/checkpoint.hpp"
#include "filagen/manifest.hpp"
#include "filagen/metrics.hpp"
#include "filagen/raster.hpp"

namespace filagen {

/// Maps a (N, 1, T, T) batch of image tiles to per-pixel probabilities.
using ProbabilityFn = std::function<torch::Tensor(const torch::Tensor&)>;

/// Tile origins along one axis: 0, s, 2s, ... while the tile stays inside,
/// then one final tile flush with the far edge. {0} when length <= tile.
std::vector<int> tile_origins(int length, int tile, int stride);

/// Averaged per-pixel probabilities over tiles of side `tile` with stride
/// tile/2. Images smaller than a tile are reflect-padded, then cropped.
GrayImage predict_probabilities(const ProbabilityFn& fn, int tile, const GrayImage& image);

/// predict_probabilities thresholded strictly above 0.5.
BinaryMask predict_seg(const ProbabilityFn& fn, int tile, const GrayImage& image);
BinaryMask predict_seg(const SegCheckpoint& checkpoint, const GrayImage& image);

using Predictor = std::function<BinaryMask(const GrayImage&)>;

/// Scores every test-split record of `manifest`.
MetricsReport evaluate(const Predictor& predict, const DatasetManifest& manifest, const Provenance& provenance);
MetricsReport evaluate(const SegCheckpoint& checkpoint, const DatasetManifest& manifest, int tolerance);

/// Montage rows for the first 8 records by id: (mask, image[, prediction]).
GrayImage preview_montage(const DatasetManifest& pairs, const SegCheckpoint* segmenter = nullptr);
/// Rows of (mask, G(mask)) for the first 8 masks by id.
GrayImage preview_montage(const GanCheckpoint& generator, const DatasetManifest& masks);

}  // namespace filagen
