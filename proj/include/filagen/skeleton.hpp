#pragma once

#include "filagen/raster.hpp"

namespace filagen {

/// Parameters of the differentiable skeleton used by the structural loss.
struct MorphParams {
  /// Soft erosion rounds k. 10 covers filament widths up to ~20 px.
  int soft_iterations = 10;
  /// Logistic slope beta of soft binarization.
  double sharpness = 50.0;
  /// Logistic midpoint t.
  double threshold = 0.5;

  /// Throws ValidationError unless k >= 1, beta > 0 and t in [0, 1].
  void validate() const;

  friend bool operator==(const MorphParams&, const MorphParams&) = default;
};

/// Zhang-Suen two-subiteration thinning run to a fixpoint. Pixels outside
/// the image count as background.
BinaryMask thin(const BinaryMask& mask);

/// Dilation by a (2r+1)x(2r+1) square, clipped at the image border.
BinaryMask dilate(const BinaryMask& mask, int radius);

/// Erosion by a (2r+1)x(2r+1) square; the window is clipped at the border
/// (out-of-image pixels do not erode).
BinaryMask erode(const BinaryMask& mask, int radius);

/// Pixelwise logistic sigma(beta * (i - t)).
GrayImage soft_binarize(const GrayImage& image, const MorphParams& params);

/// Soft-morphology skeleton: k rounds of 3x3 min-pool erosion and
/// erosion-then-max-pool opening, accumulating relu(eroded - opened).
/// Pooling replicates edge pixels. Binary input gives binary output.
GrayImage soft_skeleton(const GrayImage& image, const MorphParams& params);

/// 8-connected foreground component count.
int count_components(const BinaryMask& mask);

}  // namespace filagen
