#include <gtest/gtest.h>

#include <fstream>

#include "filagen/checkpoint.hpp"
#include "filagen/error.hpp"
#include "filagen/inference.hpp"
#include "filagen/maskgen.hpp"
#include "filagen/png_io.hpp"
#include "filagen/training.hpp"
#include "support/fixtures.hpp"
#include "support/test_support.hpp"

namespace filagen {
namespace {

using testing::TempDir;
using testing::read_bytes;

PipelineConfig tiny_config(int steps = 3) {
  PipelineConfig cfg = PipelineConfig::desk_scale();
  cfg.gan.train.steps = steps;
  cfg.gan.train.batch_size = 2;
  cfg.gan.train.log_every = 1;
  cfg.seg.train.steps = steps;
  cfg.seg.train.batch_size = 2;
  cfg.seg.train.log_every = 1;
  cfg.set_seed(3);
  return cfg;
}

bool same_parameters(const torch::nn::Module& a, const torch::nn::Module& b) {
  const auto pa = a.named_parameters();
  const auto pb = b.named_parameters();
  if (pa.size() != pb.size()) return false;
  for (const auto& item : pa) {
    const torch::Tensor* other = pb.find(item.key());
    if (other == nullptr || !torch::equal(item.value(), *other)) return false;
  }
  const auto ba = a.named_buffers();
  const auto bb = b.named_buffers();
  for (const auto& item : ba) {
    const torch::Tensor* other = bb.find(item.key());
    if (other == nullptr || !torch::equal(item.value(), *other)) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Checkpoints

TEST(Checkpoint, HeaderJsonIsCompactAndSorted) {
  const CheckpointHeader h{"abc", 1, 7, 42};
  EXPECT_EQ(h.to_json(), "{\"config_hash\":\"abc\",\"format_version\":1,\"seed\":7,\"step\":42}\n");
  EXPECT_EQ(CheckpointHeader::from_json(h.to_json()), h);
  EXPECT_THROW(CheckpointHeader::from_json("{\"seed\":1}"), ValidationError);
}

TEST(Checkpoint, GanRoundTrip) {
  TempDir dir;
  const PipelineConfig cfg = tiny_config();
  GanCheckpoint ckpt = GanCheckpoint::initialize(cfg);
  ckpt.header.step = 5;
  save_checkpoint(ckpt, dir / "g");
  EXPECT_TRUE(std::filesystem::exists(dir / "g.pt"));
  EXPECT_TRUE(std::filesystem::exists(dir / "g.json"));

  const GanCheckpoint loaded = load_gan_checkpoint(dir / "g.json");
  EXPECT_EQ(loaded.header, ckpt.header);
  EXPECT_EQ(loaded.config.hash(), cfg.hash());
  EXPECT_TRUE(same_parameters(*loaded.generator, *ckpt.generator));
  EXPECT_TRUE(same_parameters(*loaded.discriminator, *ckpt.discriminator));
  EXPECT_EQ(checkpoint_id("gan", loaded.header), "gan-" + cfg.hash().substr(0, 12) + "-step5");
}

TEST(Checkpoint, SegRoundTripAndKindMismatch) {
  TempDir dir;
  const SegCheckpoint ckpt = SegCheckpoint::initialize(tiny_config());
  save_checkpoint(ckpt, dir / "s.pt");
  const SegCheckpoint loaded = load_seg_checkpoint(dir / "s");
  EXPECT_TRUE(same_parameters(*loaded.segmenter, *ckpt.segmenter));
  EXPECT_THROW(load_gan_checkpoint(dir / "s.pt"), ValidationError);
}

TEST(Checkpoint, MissingFileNamesPath) {
  TempDir dir;
  try {
    load_seg_checkpoint(dir / "nowhere.pt");
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find((dir / "nowhere.pt").string()), std::string::npos) << e.what();
  }
}

TEST(Checkpoint, TamperedHeaderIsRejected) {
  TempDir dir;
  save_checkpoint(SegCheckpoint::initialize(tiny_config()), dir / "s");
  std::ofstream(dir / "s.json") << CheckpointHeader{"0000", 1, 3, 0}.to_json();
  EXPECT_THROW(load_seg_checkpoint(dir / "s"), ValidationError);
}

// ---------------------------------------------------------------------------
// Training

TEST(TrainGan, ZeroStepsKeepsInitialWeights) {
  TempDir dir;
  const PipelineConfig cfg = tiny_config(0);
  const GanTrainResult r = train_gan(testing::memorization_pairs(1), cfg, dir.path());
  EXPECT_TRUE(r.log.empty());
  EXPECT_EQ(r.checkpoint.header.step, 0);
  const GanCheckpoint init = GanCheckpoint::initialize(cfg);
  EXPECT_TRUE(same_parameters(*r.checkpoint.generator, *init.generator));
  EXPECT_TRUE(same_parameters(*r.checkpoint.discriminator, *init.discriminator));
  EXPECT_EQ(read_bytes(r.log_path), "");
}

TEST(TrainGan, RerunsAreByteIdentical) {
  TempDir a, b;
  const PipelineConfig cfg = tiny_config(3);
  const auto pairs = testing::memorization_pairs(1);
  const GanTrainResult ra = train_gan(pairs, cfg, a.path());
  const GanTrainResult rb = train_gan(pairs, cfg, b.path());
  ASSERT_EQ(ra.log.size(), 3u);
  EXPECT_EQ(ra.log.back().step, 3);
  EXPECT_EQ(ra.log.front().wall_time, 0.0);
  EXPECT_EQ(read_bytes(ra.log_path), read_bytes(rb.log_path));
  EXPECT_EQ(read_bytes(a / "gan.json"), read_bytes(b / "gan.json"));
  EXPECT_TRUE(same_parameters(*ra.checkpoint.generator, *rb.checkpoint.generator));
  EXPECT_EQ(ra.checkpoint.header.step, 3);
}

TEST(TrainGan, LogRecordsCarryEveryLossTerm) {
  const GanLogRecord rec{4, 0.5, 1.5, 0.25, 0.125, 0.0};
  EXPECT_EQ(rec.to_json(), R"({"adv_d":0.5,"adv_g":1.5,"l1":0.25,"step":4,"struct":0.125,"wall_time":0.0})");
}

TEST(TrainGan, IntermediateCheckpointsFollowCadence) {
  TempDir dir;
  PipelineConfig cfg = tiny_config(4);
  cfg.gan.train.checkpoint_every = 2;
  train_gan(testing::memorization_pairs(1), cfg, dir.path());
  EXPECT_TRUE(std::filesystem::exists(dir / "gan_step000002.pt"));
  EXPECT_FALSE(std::filesystem::exists(dir / "gan_step000003.pt"));
  // The final step lands in gan.pt only.
  EXPECT_FALSE(std::filesystem::exists(dir / "gan_step000004.pt"));
  EXPECT_EQ(load_gan_checkpoint(dir / "gan").header.step, 4);
}

TEST(TrainGan, EmptyTrainingSetIsAnError) {
  TempDir dir;
  EXPECT_THROW(train_gan(std::vector<PatchPair>{}, tiny_config(), dir.path()), ValidationError);
  EXPECT_THROW(train_gan(DatasetManifest{}, tiny_config(), dir.path()), ValidationError);
}

TEST(Synthesize, WritesOneImagePerMask) {
  TempDir dir;
  const PipelineConfig cfg = tiny_config();
  const GanCheckpoint gan = GanCheckpoint::initialize(cfg);
  const DatasetManifest masks = generate_mask_corpus(cfg.maskgen, 3, dir / "masks");
  const DatasetManifest paired = synthesize(gan, masks, dir / "out");
  ASSERT_EQ(paired.records.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    const auto& rec = paired.records[i];
    EXPECT_EQ(rec.origin, Origin::kSynthetic);
    EXPECT_EQ(rec.mask, masks.records[i].mask);
    char name[32];
    std::snprintf(name, sizeof name, "synth_%06zu.png", i);
    EXPECT_EQ(rec.image, dir / "out" / name);
    const GrayImage img = load_image(rec.image);
    EXPECT_EQ(img.width(), 64);
    EXPECT_EQ(img.height(), 64);
  }
  const std::string first = read_bytes(paired.records[0].image);
  synthesize(gan, masks, dir / "out");
  EXPECT_EQ(read_bytes(paired.records[0].image), first);
}

TEST(Synthesize, EmptyFragmentWritesNothing) {
  TempDir dir;
  const GanCheckpoint gan = GanCheckpoint::initialize(tiny_config());
  EXPECT_TRUE(synthesize(gan, DatasetManifest{}, dir / "out").empty());
  EXPECT_FALSE(std::filesystem::exists(dir / "out"));
}

TEST(Synthesize, RejectsWrongMaskSize) {
  const GanCheckpoint gan = GanCheckpoint::initialize(tiny_config());
  EXPECT_THROW(generate_images(gan, {BinaryMask(32, 32)}), ValidationError);
}

TEST(TrainSeg, RunsWithoutSyntheticData) {
  TempDir dir;
  const SegTrainResult r = train_seg(testing::memorization_pairs(2), {}, tiny_config(2), dir.path());
  ASSERT_EQ(r.log.size(), 2u);
  EXPECT_TRUE(std::isfinite(r.log.back().bce));
  EXPECT_TRUE(std::filesystem::exists(dir / "seg.pt"));
  EXPECT_TRUE(std::filesystem::exists(dir / "seg.json"));
  EXPECT_EQ(load_seg_checkpoint(r.checkpoint_path).header.step, 2);
}

TEST(TrainSeg, RerunsAreByteIdentical) {
  TempDir a, b;
  const auto real = testing::memorization_pairs(2);
  const auto synth = testing::memorization_pairs(4);
  const SegTrainResult ra = train_seg(real, synth, tiny_config(3), a.path());
  const SegTrainResult rb = train_seg(real, synth, tiny_config(3), b.path());
  EXPECT_EQ(read_bytes(ra.log_path), read_bytes(rb.log_path));
  EXPECT_TRUE(same_parameters(*ra.checkpoint.segmenter, *rb.checkpoint.segmenter));
}

TEST(TrainSeg, EmptyRealSetIsAnError) {
  TempDir dir;
  EXPECT_THROW(train_seg(std::vector<PatchPair>{}, testing::memorization_pairs(2), tiny_config(), dir.path()),
               ValidationError);
}

TEST(LoadPatchPairs, CutsTrainRecordsOnTheGrid) {
  TempDir dir;
  const DatasetManifest real = testing::write_real_dataset(dir.path(), 3, 1, 128, 5);
  TrainConfig train = tiny_config().gan.train;
  const auto pairs = load_patch_pairs(real, train);
  EXPECT_EQ(pairs.size(), 2u * 4u);
  for (const auto& p : pairs) {
    EXPECT_EQ(p.image.width(), 64);
    EXPECT_EQ(p.mask.height(), 64);
  }
}

// ---------------------------------------------------------------------------
// Tiled inference

TEST(TileOrigins, CoverLargeFrames) {
  EXPECT_EQ(tile_origins(1400, 256, 128).size(), 10u);
  EXPECT_EQ(tile_origins(1524, 256, 128).size(), 11u);
  EXPECT_EQ(tile_origins(1400, 256, 128).back(), 1400 - 256);
  EXPECT_EQ(tile_origins(256, 256, 128), std::vector<int>{0});
  EXPECT_EQ(tile_origins(100, 256, 128), std::vector<int>{0});
  EXPECT_EQ(tile_origins(384, 256, 128), (std::vector<int>{0, 128}));
  EXPECT_THROW(tile_origins(10, 0, 1), ValidationError);
}

TEST(PredictSeg, ConstantHalfIsBackground) {
  Rng rng(1);
  const GrayImage img = testing::random_image(rng, 100, 70);
  const BinaryMask m = predict_seg([](const torch::Tensor& x) { return torch::full_like(x, 0.5); }, 32, img);
  EXPECT_EQ(m.width(), 100);
  EXPECT_EQ(m.height(), 70);
  EXPECT_EQ(m.count(), 0u);
}

TEST(PredictSeg, PixelwiseModelIsTilingInvariant) {
  Rng rng(2);
  const GrayImage img = testing::random_image(rng, 90, 77);
  const auto identity = [](const torch::Tensor& x) { return x.clone(); };
  const GrayImage probs = predict_probabilities(identity, 32, img);
  for (int r = 0; r < img.height(); ++r) {
    for (int c = 0; c < img.width(); ++c) ASSERT_NEAR(probs.at(r, c), img.at(r, c), 1e-6);
  }
  // Shifting the frame shifts the prediction.
  const GrayImage shifted = img.crop(5, 9, 60, 70);
  const BinaryMask whole = predict_seg(identity, 32, img);
  const BinaryMask part = predict_seg(identity, 32, shifted);
  for (int r = 0; r < 60; ++r) {
    for (int c = 0; c < 70; ++c) ASSERT_EQ(part.at(r, c), whole.at(r + 5, c + 9));
  }
}

TEST(PredictSeg, SmallImagesAreReflectPadded) {
  Rng rng(3);
  const GrayImage img = testing::random_image(rng, 20, 12);
  std::vector<std::int64_t> seen;
  const auto probe = [&](const torch::Tensor& x) {
    seen = x.sizes().vec();
    return x.clone();
  };
  const GrayImage probs = predict_probabilities(probe, 32, img);
  EXPECT_EQ(seen, (std::vector<std::int64_t>{1, 1, 32, 32}));
  EXPECT_EQ(probs.width(), 20);
  EXPECT_EQ(probs.height(), 12);
  for (int r = 0; r < 12; ++r) {
    for (int c = 0; c < 20; ++c) ASSERT_NEAR(probs.at(r, c), img.at(r, c), 1e-6);
  }
}

TEST(PredictSeg, ThresholdIsStrict) {
  const GrayImage img(4, 4, std::vector<double>(16, 0.5));
  const auto over = [](const torch::Tensor& x) { return x + 1e-3; };
  EXPECT_EQ(predict_seg([](const torch::Tensor& x) { return x.clone(); }, 4, img).count(), 0u);
  EXPECT_EQ(predict_seg(over, 4, img).count(), 16u);
}

TEST(Evaluate, ScoresTestSplitOnly) {
  TempDir dir;
  const DatasetManifest real = testing::write_real_dataset(dir.path(), 4, 2, 64, 9);
  const Provenance prov{"oracle", "hash", 1, 2};
  const MetricsReport perfect = evaluate(
      [&](const GrayImage& img) {
        for (const auto& rec : real.records) {
          if (load_image(rec.image) == img) return load_mask(rec.mask);
        }
        return BinaryMask(img.width(), img.height());
      },
      real, prov);
  ASSERT_EQ(perfect.per_image.size(), 2u);
  EXPECT_DOUBLE_EQ(perfect.mean_iou, 1.0);
  EXPECT_DOUBLE_EQ(perfect.mean_skiou, 1.0);
  EXPECT_THROW(evaluate([](const GrayImage& i) { return BinaryMask(i.width(), i.height()); },
                        real.filter(Split::kTrain), prov),
               ValidationError);
}

TEST(Preview, MontageOfPairsWithPredictions) {
  TempDir dir;
  const DatasetManifest real = testing::write_real_dataset(dir.path(), 3, 0, 64, 4);
  const SegCheckpoint seg = SegCheckpoint::initialize(tiny_config());
  const GrayImage plain = preview_montage(real);
  const GrayImage with_pred = preview_montage(real, &seg);
  EXPECT_EQ(plain.height(), with_pred.height());
  EXPECT_GT(with_pred.width(), plain.width());
  EXPECT_THROW(preview_montage(DatasetManifest{}), ValidationError);
}

}  // namespace
}  // namespace filagen
