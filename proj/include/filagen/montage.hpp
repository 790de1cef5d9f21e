#pragma once

#include <vector>

#include "filagen/raster.hpp"

namespace filagen {

inline constexpr int kMontageSeparator = 2;
inline constexpr std::size_t kMontageMaxRows = 8;

/// Grid montage with 2-px white separators between cells. Every row must
/// have the same number of columns and all cells one common size. Rows
/// beyond kMontageMaxRows are dropped.
GrayImage compose_montage(const std::vector<std::vector<GrayImage>>& rows);

}  // namespace filagen
