#include "filagen/montage.hpp"

#include <algorithm>

#include "filagen/error.hpp"

namespace filagen {

GrayImage compose_montage(const std::vector<std::vector<GrayImage>>& rows) {
  if (rows.empty() || rows.front().empty()) throw ValidationError("montage needs at least one cell");
  const std::size_t n_rows = std::min(rows.size(), kMontageMaxRows);
  const std::size_t n_cols = rows.front().size();
  const int cell_w = rows.front().front().width();
  const int cell_h = rows.front().front().height();
  for (std::size_t r = 0; r < n_rows; ++r) {
    if (rows[r].size() != n_cols) throw ValidationError("montage rows differ in column count");
    for (const auto& cell : rows[r]) {
      if (cell.width() != cell_w || cell.height() != cell_h) {
        throw ValidationError("montage cells differ in size");
      }
    }
  }

  const int cols = static_cast<int>(n_cols);
  const int nrows = static_cast<int>(n_rows);
  const int width = cols * cell_w + (cols - 1) * kMontageSeparator;
  const int height = nrows * cell_h + (nrows - 1) * kMontageSeparator;
  GrayImage out(width, height, 1.0);
  for (int r = 0; r < nrows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const GrayImage& cell = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
      const int top = r * (cell_h + kMontageSeparator);
      const int left = c * (cell_w + kMontageSeparator);
      for (int y = 0; y < cell_h; ++y) {
        for (int x = 0; x < cell_w; ++x) out.set(top + y, left + x, cell.at(y, x));
      }
    }
  }
  return out;
}

}  // namespace filagen
