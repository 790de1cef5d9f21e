#include <gtest/gtest.h>

#include <cmath>

#include "filagen/error.hpp"
#include "filagen/maskgen.hpp"
#include "filagen/skeleton.hpp"
#include "support/test_support.hpp"

namespace filagen {
namespace {

// Textbook Zhang-Suen on a zero-padded integer grid, written out with the
// named neighbours P2..P9. Reference trace for `thin`.
BinaryMask reference_zhang_suen(const BinaryMask& in) {
  const int h = in.height() + 2;
  const int w = in.width() + 2;
  std::vector<std::vector<int>> g(static_cast<std::size_t>(h), std::vector<int>(static_cast<std::size_t>(w), 0));
  for (int r = 0; r < in.height(); ++r) {
    for (int c = 0; c < in.width(); ++c) g[r + 1][c + 1] = in.at(r, c) ? 1 : 0;
  }
  for (;;) {
    int removed = 0;
    for (int pass = 0; pass < 2; ++pass) {
      std::vector<std::pair<int, int>> kill;
      for (int y = 1; y < h - 1; ++y) {
        for (int x = 1; x < w - 1; ++x) {
          if (!g[y][x]) continue;
          const int P2 = g[y - 1][x], P3 = g[y - 1][x + 1], P4 = g[y][x + 1], P5 = g[y + 1][x + 1];
          const int P6 = g[y + 1][x], P7 = g[y + 1][x - 1], P8 = g[y][x - 1], P9 = g[y - 1][x - 1];
          const int B = P2 + P3 + P4 + P5 + P6 + P7 + P8 + P9;
          const int A = (!P2 && P3) + (!P3 && P4) + (!P4 && P5) + (!P5 && P6) + (!P6 && P7) +
                        (!P7 && P8) + (!P8 && P9) + (!P9 && P2);
          const bool m1 = pass == 0 ? (P2 * P4 * P6 == 0) : (P2 * P4 * P8 == 0);
          const bool m2 = pass == 0 ? (P4 * P6 * P8 == 0) : (P2 * P6 * P8 == 0);
          if (B >= 2 && B <= 6 && A == 1 && m1 && m2) kill.emplace_back(y, x);
        }
      }
      for (auto [y, x] : kill) g[y][x] = 0;
      removed += static_cast<int>(kill.size());
    }
    if (removed == 0) break;
  }
  BinaryMask out(in.width(), in.height());
  for (int r = 0; r < in.height(); ++r) {
    for (int c = 0; c < in.width(); ++c) out.set(r, c, g[r + 1][c + 1] != 0);
  }
  return out;
}

// Union of shifted copies: the set definition of square dilation.
BinaryMask reference_dilate(const BinaryMask& in, int r) {
  BinaryMask out(in.width(), in.height());
  for (int dy = -r; dy <= r; ++dy) {
    for (int dx = -r; dx <= r; ++dx) {
      for (int y = 0; y < in.height(); ++y) {
        for (int x = 0; x < in.width(); ++x) {
          if (in.at_or_false(y - dy, x - dx)) out.set(y, x, true);
        }
      }
    }
  }
  return out;
}

bool subset(const BinaryMask& a, const BinaryMask& b) {
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a.data()[i] && !b.data()[i]) return false;
  }
  return true;
}

TEST(Thin, EmptyAndSinglePixel) {
  BinaryMask empty(9, 7);
  EXPECT_EQ(thin(empty), empty);
  BinaryMask dot(9, 7);
  dot.set(3, 4, true);
  EXPECT_EQ(thin(dot), dot);
  BinaryMask corner(3, 3);
  corner.set(0, 0, true);
  EXPECT_EQ(thin(corner), corner);
}

TEST(Thin, BarReducesToCenterline) {
  const BinaryMask bar = testing::bar_mask(30, 11, 4, 5, 3, 20);
  const BinaryMask skel = thin(bar);
  EXPECT_EQ(skel, reference_zhang_suen(bar));
  for (int r = 0; r < 11; ++r) {
    for (int c = 0; c < 30; ++c) {
      if (skel.at(r, c)) {
        EXPECT_EQ(r, 5) << "pixel off the centerline at col " << c;
      }
    }
  }
  // Interior of the centerline is intact (the ends may be trimmed).
  for (int c = 7; c <= 22; ++c) EXPECT_TRUE(skel.at(5, c)) << c;
  EXPECT_EQ(count_components(skel), 1);
}

TEST(Thin, MatchesReferenceOnRandomMasks) {
  Rng rng(101);
  for (int trial = 0; trial < 40; ++trial) {
    BinaryMask m = testing::random_mask(rng, 24, 20, 0.55);
    ASSERT_EQ(thin(m), reference_zhang_suen(m)) << "trial " << trial;
  }
}

TEST(Thin, IdempotentAndContained) {
  Rng rng(7);
  for (int trial = 0; trial < 60; ++trial) {
    BinaryMask m = testing::random_mask(rng, 32, 32, 0.2 + 0.6 * rng.uniform01());
    BinaryMask once = thin(m);
    EXPECT_TRUE(subset(once, m));
    EXPECT_EQ(thin(once), once) << "trial " << trial;
  }
}

TEST(Thin, PreservesComponentsOfRenderedCurves) {
  MaskGenConfig cfg = MaskGenConfig::for_preset(FilamentPreset::kMicrotubule, 96, 96, 9);
  cfg.count = {1, 1};
  for (std::uint64_t i = 0; i < 30; ++i) {
    BinaryMask m = generate_mask(cfg, i);
    EXPECT_EQ(count_components(thin(m)), count_components(m)) << "mask " << i;
  }
}

TEST(Dilate, Examples) {
  Rng rng(2);
  BinaryMask any = testing::random_mask(rng, 13, 9, 0.3);
  EXPECT_EQ(dilate(any, 0), any);

  BinaryMask center(5, 5);
  center.set(2, 2, true);
  BinaryMask d = dilate(center, 1);
  for (int r = 0; r < 5; ++r) {
    for (int c = 0; c < 5; ++c) EXPECT_EQ(d.at(r, c), r >= 1 && r <= 3 && c >= 1 && c <= 3);
  }

  // Three background pixels between the two: the 3-wide runs keep a 1-px gap.
  BinaryMask pair(15, 3);
  pair.set(1, 5, true);
  pair.set(1, 9, true);
  BinaryMask dp = dilate(pair, 1);
  EXPECT_EQ(dp, reference_dilate(pair, 1));
  for (int c = 0; c < 15; ++c) EXPECT_EQ(dp.at(1, c), (c >= 4 && c <= 6) || (c >= 8 && c <= 10)) << c;
  EXPECT_FALSE(dp.at(1, 7));

  EXPECT_THROW(dilate(pair, -1), ValidationError);
}

TEST(Dilate, MatchesShiftUnionAndClipsAtBorder) {
  Rng rng(44);
  for (int r = 0; r <= 3; ++r) {
    BinaryMask m = testing::random_mask(rng, 17, 12, 0.08);
    EXPECT_EQ(dilate(m, r), reference_dilate(m, r)) << "r=" << r;
  }
  BinaryMask edge(4, 4);
  edge.set(0, 0, true);
  EXPECT_EQ(dilate(edge, 1).count(), 4u);
}

TEST(Erode, IsDualOfDilateOnInterior) {
  BinaryMask block = testing::bar_mask(12, 12, 3, 3, 5, 5);
  BinaryMask e = erode(block, 1);
  EXPECT_EQ(e, testing::bar_mask(12, 12, 4, 4, 3, 3));
  EXPECT_EQ(erode(block, 0), block);
}

// ---------------------------------------------------------------------------

TEST(SoftBinarize, LogisticValues) {
  MorphParams p{3, 50.0, 0.5};
  GrayImage img(3, 1, std::vector<double>{0.5, 0.6, 0.4});
  GrayImage out = soft_binarize(img, p);
  EXPECT_DOUBLE_EQ(out.at(0, 0), 0.5);
  EXPECT_NEAR(out.at(0, 1), 1.0 / (1.0 + std::exp(-5.0)), 1e-15);
  EXPECT_NEAR(out.at(0, 1), 0.99331, 1e-5);
  EXPECT_NEAR(out.at(0, 2), 0.00669, 1e-5);
  // Strictly inside (0, 1) across the whole input range at beta = 50.
  GrayImage ends(2, 1, std::vector<double>{0.0, 1.0});
  GrayImage e = soft_binarize(ends, p);
  EXPECT_GT(e.at(0, 0), 0.0);
  EXPECT_LT(e.at(0, 1), 1.0);
}

TEST(MorphParams, Validation) {
  EXPECT_THROW((MorphParams{0, 50.0, 0.5}).validate(), ConfigError);
  EXPECT_THROW((MorphParams{3, 0.0, 0.5}).validate(), ConfigError);
  EXPECT_THROW((MorphParams{3, 1.0, 1.5}).validate(), ConfigError);
  EXPECT_NO_THROW(MorphParams{}.validate());
}

TEST(SoftSkeleton, ZeroImage) {
  GrayImage zero(10, 8);
  EXPECT_EQ(soft_skeleton(zero, MorphParams{}), zero);
}

TEST(SoftSkeleton, BarOfWidthThree) {
  // Hand evaluation: the 3x20 rectangle equals its own opening, so round 0
  // contributes nothing; round 1 erodes to the centre row (columns 6..23),
  // whose opening is empty, so the centre row is the skeleton.
  const BinaryMask bar = testing::bar_mask(32, 14, 5, 5, 3, 20);
  for (int k : {1, 2, 5, 10}) {
    GrayImage skel = soft_skeleton(to_gray(bar), MorphParams{k, 50.0, 0.5});
    for (int r = 0; r < 14; ++r) {
      for (int c = 0; c < 32; ++c) {
        const bool expected = r == 6 && c >= 6 && c <= 23;
        ASSERT_EQ(skel.at(r, c), expected ? 1.0 : 0.0) << "k=" << k << " at " << r << "," << c;
      }
    }
  }
}

TEST(SoftSkeleton, BinaryInputGivesBinarySubset) {
  Rng rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    BinaryMask m = testing::random_mask(rng, 20, 16, 0.5);
    GrayImage skel = soft_skeleton(to_gray(m), MorphParams{1 + trial % 6, 50.0, 0.5});
    for (std::size_t i = 0; i < m.size(); ++i) {
      const double v = skel.data()[i];
      ASSERT_TRUE(v == 0.0 || v == 1.0);
      ASSERT_LE(v, static_cast<double>(m.data()[i]));
    }
  }
}

TEST(SoftSkeleton, OutputInUnitIntervalForGrayInput) {
  Rng rng(9);
  GrayImage img = testing::random_image(rng, 16, 16);
  GrayImage skel = soft_skeleton(img, MorphParams{4, 50.0, 0.5});
  for (double v : skel.data()) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(SoftSkeleton, MassStopsGrowingOnceBarIsEroded) {
  auto mass = [](const GrayImage& g) {
    double s = 0.0;
    for (double v : g.data()) s += v;
    return s;
  };
  for (int width : {1, 2, 3, 5, 7}) {
    const BinaryMask bar = testing::bar_mask(48, 24, 4, 6, width, 30);
    const int k0 = (width + 1) / 2;
    double previous = mass(soft_skeleton(to_gray(bar), MorphParams{k0, 50.0, 0.5}));
    for (int k = k0 + 1; k <= k0 + 5; ++k) {
      const double current = mass(soft_skeleton(to_gray(bar), MorphParams{k, 50.0, 0.5}));
      EXPECT_LE(current, previous) << "width " << width << " k " << k;
      previous = current;
    }
  }
}

TEST(Components, EightConnectivity) {
  BinaryMask m(5, 5);
  m.set(0, 0, true);
  m.set(1, 1, true);  // diagonal neighbour: same component
  m.set(3, 3, true);
  EXPECT_EQ(count_components(m), 2);
  EXPECT_EQ(count_components(BinaryMask(4, 4)), 0);
}

}  // namespace
}  // namespace filagen
