#include "filagen/skeleton.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "filagen/error.hpp"

namespace filagen {

void MorphParams::validate() const {
  if (soft_iterations < 1) throw ConfigError("morph.soft_iterations", "must be >= 1");
  if (!(sharpness > 0.0)) throw ConfigError("morph.sharpness", "must be > 0");
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw ConfigError("morph.threshold", "must lie in [0, 1]");
  }
}

// ---------------------------------------------------------------------------
// Zhang-Suen

namespace {

// Neighbours P2..P9, clockwise from north.
std::array<int, 8> neighbourhood(const BinaryMask& m, int r, int c) {
  return {m.at_or_false(r - 1, c),     m.at_or_false(r - 1, c + 1), m.at_or_false(r, c + 1),
          m.at_or_false(r + 1, c + 1), m.at_or_false(r + 1, c),     m.at_or_false(r + 1, c - 1),
          m.at_or_false(r, c - 1),     m.at_or_false(r - 1, c - 1)};
}

bool deletable(const std::array<int, 8>& p, bool first_pass) {
  int b = 0;
  for (int v : p) b += v;
  if (b < 2 || b > 6) return false;

  int a = 0;  // 0 -> 1 transitions around the ring
  for (std::size_t i = 0; i < 8; ++i) {
    if (p[i] == 0 && p[(i + 1) % 8] == 1) ++a;
  }
  if (a != 1) return false;

  const int p2 = p[0], p4 = p[2], p6 = p[4], p8 = p[6];
  if (first_pass) return p2 * p4 * p6 == 0 && p4 * p6 * p8 == 0;
  return p2 * p4 * p8 == 0 && p2 * p6 * p8 == 0;
}

}  // namespace

BinaryMask thin(const BinaryMask& mask) {
  BinaryMask current = mask;
  std::vector<std::pair<int, int>> marked;
  bool changed = true;
  while (changed) {
    changed = false;
    for (bool first_pass : {true, false}) {
      marked.clear();
      for (int r = 0; r < current.height(); ++r) {
        for (int c = 0; c < current.width(); ++c) {
          if (current.at(r, c) && deletable(neighbourhood(current, r, c), first_pass)) {
            marked.emplace_back(r, c);
          }
        }
      }
      for (auto [r, c] : marked) current.set(r, c, false);
      changed = changed || !marked.empty();
    }
  }
  return current;
}

// ---------------------------------------------------------------------------
// Binary dilation / erosion, separable over rows then columns.

namespace {

template <bool kDilate>
BinaryMask square_morph(const BinaryMask& mask, int radius) {
  if (radius < 0) throw ValidationError("morphology radius must be >= 0");
  if (radius == 0) return mask;
  const int h = mask.height();
  const int w = mask.width();

  BinaryMask horizontal(w, h);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      bool v = !kDilate;
      for (int cc = std::max(0, c - radius); cc <= std::min(w - 1, c + radius); ++cc) {
        if constexpr (kDilate) {
          v = v || mask.at(r, cc);
        } else {
          v = v && mask.at(r, cc);
        }
      }
      horizontal.set(r, c, v);
    }
  }
  BinaryMask out(w, h);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      bool v = !kDilate;
      for (int rr = std::max(0, r - radius); rr <= std::min(h - 1, r + radius); ++rr) {
        if constexpr (kDilate) {
          v = v || horizontal.at(rr, c);
        } else {
          v = v && horizontal.at(rr, c);
        }
      }
      out.set(r, c, v);
    }
  }
  return out;
}

}  // namespace

BinaryMask dilate(const BinaryMask& mask, int radius) { return square_morph<true>(mask, radius); }

BinaryMask erode(const BinaryMask& mask, int radius) { return square_morph<false>(mask, radius); }

// ---------------------------------------------------------------------------
// Soft morphology

GrayImage soft_binarize(const GrayImage& image, const MorphParams& params) {
  params.validate();
  std::vector<double> out(image.size());
  std::transform(image.data().begin(), image.data().end(), out.begin(), [&](double v) {
    return 1.0 / (1.0 + std::exp(-params.sharpness * (v - params.threshold)));
  });
  return GrayImage(image.width(), image.height(), std::move(out));
}

namespace {

using Plane = std::vector<double>;

// 3x3 pooling with edge replication.
template <typename Reduce>
Plane pool3(const Plane& in, int h, int w, Reduce reduce) {
  Plane out(in.size());
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      double acc = in[static_cast<std::size_t>(r * w + c)];
      for (int dr = -1; dr <= 1; ++dr) {
        const int rr = std::clamp(r + dr, 0, h - 1);
        for (int dc = -1; dc <= 1; ++dc) {
          const int cc = std::clamp(c + dc, 0, w - 1);
          acc = reduce(acc, in[static_cast<std::size_t>(rr * w + cc)]);
        }
      }
      out[static_cast<std::size_t>(r * w + c)] = acc;
    }
  }
  return out;
}

Plane soft_erode(const Plane& in, int h, int w) {
  return pool3(in, h, w, [](double a, double b) { return std::min(a, b); });
}

Plane soft_dilate(const Plane& in, int h, int w) {
  return pool3(in, h, w, [](double a, double b) { return std::max(a, b); });
}

Plane soft_open(const Plane& in, int h, int w) { return soft_dilate(soft_erode(in, h, w), h, w); }

}  // namespace

GrayImage soft_skeleton(const GrayImage& image, const MorphParams& params) {
  params.validate();
  const int h = image.height();
  const int w = image.width();
  if (image.size() == 0) return image;

  Plane current(image.data().begin(), image.data().end());
  Plane skel(current.size());
  Plane opened = soft_open(current, h, w);
  for (std::size_t i = 0; i < skel.size(); ++i) skel[i] = std::max(0.0, current[i] - opened[i]);

  for (int k = 0; k < params.soft_iterations; ++k) {
    current = soft_erode(current, h, w);
    opened = soft_open(current, h, w);
    for (std::size_t i = 0; i < skel.size(); ++i) {
      const double delta = std::max(0.0, current[i] - opened[i]);
      skel[i] += std::max(0.0, delta - skel[i] * delta);
    }
  }
  for (double& v : skel) v = std::clamp(v, 0.0, 1.0);
  return GrayImage(w, h, std::move(skel));
}

// ---------------------------------------------------------------------------

int count_components(const BinaryMask& mask) {
  const int h = mask.height();
  const int w = mask.width();
  std::vector<std::uint8_t> seen(mask.size(), 0);
  std::vector<std::pair<int, int>> stack;
  int components = 0;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const auto idx = static_cast<std::size_t>(r * w + c);
      if (!mask.at(r, c) || seen[idx]) continue;
      ++components;
      seen[idx] = 1;
      stack.emplace_back(r, c);
      while (!stack.empty()) {
        auto [pr, pc] = stack.back();
        stack.pop_back();
        for (int dr = -1; dr <= 1; ++dr) {
          for (int dc = -1; dc <= 1; ++dc) {
            const int nr = pr + dr;
            const int nc = pc + dc;
            if (!mask.at_or_false(nr, nc)) continue;
            const auto nidx = static_cast<std::size_t>(nr * w + nc);
            if (seen[nidx]) continue;
            seen[nidx] = 1;
            stack.emplace_back(nr, nc);
          }
        }
      }
    }
  }
  return components;
}

}  // namespace filagen
