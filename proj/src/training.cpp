#include "filagen/training.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "filagen/error.hpp"
#include "filagen/neural.hpp"
#include "filagen/png_io.hpp"
#include "filagen/random.hpp"

namespace filagen {

using json = nlohmann::json;

namespace {

constexpr std::uint64_t kGanSampleStream = 0x47414e53;
constexpr std::uint64_t kRealSampleStream = 0x5245414c;
constexpr std::uint64_t kSynthSampleStream = 0x53594e54;
constexpr std::uint64_t kAugmentStream = 0x41554720;
constexpr int kInferenceBatch = 16;

/// Draws indices from successive seeded permutations of [0, n).
class EpochSampler {
 public:
  EpochSampler(std::size_t n, std::uint64_t seed) : n_(n), seed_(seed) {}

  std::vector<std::int64_t> take(std::size_t count) {
    std::vector<std::int64_t> out;
    out.reserve(count);
    while (out.size() < count) {
      if (pos_ == order_.size()) reshuffle();
      out.push_back(static_cast<std::int64_t>(order_[pos_++]));
    }
    return out;
  }

 private:
  void reshuffle() {
    order_.resize(n_);
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    Rng rng(child_seed(seed_, epoch_++));
    for (std::size_t i = n_; i > 1; --i) {
      const auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1));
      std::swap(order_[i - 1], order_[j]);
    }
    pos_ = 0;
  }

  std::size_t n_;
  std::uint64_t seed_;
  std::uint64_t epoch_ = 0;
  std::vector<std::size_t> order_;
  std::size_t pos_ = 0;
};

struct PatchTensors {
  torch::Tensor images;  // (P, 1, T, T)
  torch::Tensor masks;
};

PatchTensors to_tensors(const std::vector<PatchPair>& patches) {
  std::vector<GrayImage> images;
  std::vector<BinaryMask> masks;
  images.reserve(patches.size());
  masks.reserve(patches.size());
  for (const auto& p : patches) {
    images.push_back(p.image);
    masks.push_back(p.mask);
  }
  return {nn::stack(images), nn::stack(masks)};
}

void check_patch_sizes(const std::vector<PatchPair>& patches, int size, const char* what) {
  for (const auto& p : patches) {
    if (p.image.width() != size || p.image.height() != size || p.mask.width() != size ||
        p.mask.height() != size) {
      throw ValidationError(std::string(what) + ": patch '" + p.source_id + "' is not " + std::to_string(size) +
                            "x" + std::to_string(size));
    }
  }
}

class Clock {
 public:
  explicit Clock(bool frozen) : frozen_(frozen), start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    if (frozen_) return 0.0;
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  bool frozen_;
  std::chrono::steady_clock::time_point start_;
};

std::ofstream open_log(const std::filesystem::path& path) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw RuntimeFailure("cannot open training log '" + path.string() + "'");
  return out;
}

void ensure_finite(std::initializer_list<double> values, int step) {
  for (double v : values) {
    if (!std::isfinite(v)) throw RuntimeFailure("training diverged: non-finite loss at step " + std::to_string(step));
  }
}

std::string format_step(const char* stem, int step) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_step%06d", stem, step);
  return buf;
}

torch::optim::Adam make_adam(const std::vector<torch::Tensor>& params, const TrainConfig& t) {
  return torch::optim::Adam(params, torch::optim::AdamOptions(t.learning_rate).betas({t.beta1, t.beta2}));
}

}  // namespace

// ---------------------------------------------------------------------------

void apply_determinism(const RunOptions& options) {
  if (options.deterministic) {
    torch::set_num_threads(1);
    at::globalContext().setDeterministicAlgorithms(true, false);
  }
}

std::string GanLogRecord::to_json() const {
  return json{{"step", step}, {"adv_d", adv_d}, {"adv_g", adv_g}, {"l1", l1}, {"struct", struct_term},
              {"wall_time", wall_time}}
      .dump();
}

std::string SegLogRecord::to_json() const {
  return json{{"step", step}, {"bce", bce}, {"wall_time", wall_time}}.dump();
}

std::vector<PatchPair> load_patch_pairs(const DatasetManifest& manifest, const TrainConfig& train) {
  const PatchGrid grid{train.patch_size, train.stride(), train.min_foreground};
  std::vector<PatchPair> out;
  for (const auto& rec : manifest.records) {
    if (rec.split != Split::kTrain) continue;
    if (rec.image.empty()) throw ValidationError("record '" + rec.id + "' has no image");
    const GrayImage image = load_image(rec.image);
    const BinaryMask mask = load_mask(rec.mask);
    if (image.width() != mask.width() || image.height() != mask.height()) {
      throw ValidationError("record '" + rec.id + "': image and mask dimensions differ");
    }
    auto patches = extract_patches(image, mask, grid, rec.id);
    out.insert(out.end(), std::make_move_iterator(patches.begin()), std::make_move_iterator(patches.end()));
  }
  return out;
}

// ---------------------------------------------------------------------------

GanTrainResult train_gan(const DatasetManifest& manifest, const PipelineConfig& config,
                         const std::filesystem::path& out_dir, const RunOptions& options) {
  const DatasetManifest real = manifest.filter(Origin::kReal).filter(Split::kTrain);
  if (real.empty()) throw ValidationError("train-gan: manifest has no real training pairs");
  return train_gan(load_patch_pairs(real, config.gan.train), config, out_dir, options);
}

GanTrainResult train_gan(const std::vector<PatchPair>& patches, const PipelineConfig& config,
                         const std::filesystem::path& out_dir, const RunOptions& options) {
  const TrainConfig& t = config.gan.train;
  config.gan.generator.validate_patch(t.patch_size);
  t.validate("gan.train");
  if (patches.empty()) throw ValidationError("train-gan: no training patches");
  if (patches.size() < static_cast<std::size_t>(t.batch_size)) {
    throw ValidationError("train-gan: " + std::to_string(patches.size()) + " patches is fewer than batch size " +
                          std::to_string(t.batch_size));
  }
  check_patch_sizes(patches, t.patch_size, "train-gan");
  apply_determinism(options);

  GanTrainResult result;
  result.checkpoint = GanCheckpoint::initialize(config);
  result.checkpoint_path = out_dir / "gan.pt";
  result.log_path = out_dir / "train_log.jsonl";
  std::ofstream log = open_log(result.log_path);

  auto& G = result.checkpoint.generator;
  auto& D = result.checkpoint.discriminator;
  G->train();
  D->train();
  auto opt_g = make_adam(G->parameters(), t);
  auto opt_d = make_adam(D->parameters(), t);

  const PatchTensors data = to_tensors(patches);
  EpochSampler sampler(patches.size(), child_seed(t.seed, kGanSampleStream));
  const Clock clock(options.deterministic);

  for (int step = 1; step <= t.steps; ++step) {
    const auto idx = torch::tensor(sampler.take(static_cast<std::size_t>(t.batch_size)), torch::kLong);
    const torch::Tensor x = data.masks.index_select(0, idx);
    const torch::Tensor y = data.images.index_select(0, idx);

    const torch::Tensor fake = G->forward(x);

    const torch::Tensor loss_d = nn::adversarial_losses(D->forward(x, y), D->forward(x, fake.detach())).discriminator;
    opt_d.zero_grad();
    loss_d.backward();
    opt_d.step();

    const torch::Tensor adv_g = nn::generator_adversarial_loss(D->forward(x, fake));
    const torch::Tensor l1 = nn::l1_loss(y, fake);
    torch::Tensor st;
    if (t.loss_weights.lambda_s > 0.0) {
      st = nn::struct_loss(y, fake, t.morph);
    } else {
      torch::NoGradGuard no_grad;
      st = nn::struct_loss(y, fake.detach(), t.morph);
    }
    const torch::Tensor objective = nn::generator_objective(adv_g, l1, st, t.loss_weights);
    opt_g.zero_grad();
    objective.backward();
    opt_g.step();

    GanLogRecord rec{step, loss_d.item<double>(), adv_g.item<double>(), l1.item<double>(), st.item<double>(), 0.0};
    ensure_finite({rec.adv_d, rec.adv_g, rec.l1, rec.struct_term}, step);

    if (step % t.log_every == 0 || step == t.steps) {
      rec.wall_time = clock.seconds();
      log << rec.to_json() << '\n' << std::flush;
      result.log.push_back(rec);
      if (options.progress) {
        char line[160];
        std::snprintf(line, sizeof line, "train-gan step %d/%d adv_d=%.4f adv_g=%.4f l1=%.4f struct=%.5f", step,
                      t.steps, rec.adv_d, rec.adv_g, rec.l1, rec.struct_term);
        options.progress(line);
      }
    }
    if (t.checkpoint_every > 0 && step % t.checkpoint_every == 0 && step != t.steps) {
      result.checkpoint.header.step = step;
      save_checkpoint(result.checkpoint, out_dir / format_step("gan", step));
    }
  }
  result.checkpoint.header.step = t.steps;
  G->eval();
  D->eval();
  save_checkpoint(result.checkpoint, result.checkpoint_path);
  return result;
}

// ---------------------------------------------------------------------------

std::vector<GrayImage> generate_images(const GanCheckpoint& checkpoint, const std::vector<BinaryMask>& masks) {
  const int side = checkpoint.config.gan.train.patch_size;
  for (const auto& m : masks) {
    if (m.width() != side || m.height() != side) {
      throw ValidationError("mask is " + std::to_string(m.width()) + "x" + std::to_string(m.height()) +
                            " but the generator was trained on " + std::to_string(side) + "x" +
                            std::to_string(side) + " patches");
    }
  }
  torch::NoGradGuard no_grad;
  auto G = checkpoint.generator;
  G->eval();
  std::vector<GrayImage> out;
  out.reserve(masks.size());
  for (std::size_t start = 0; start < masks.size(); start += kInferenceBatch) {
    const std::size_t end = std::min(masks.size(), start + kInferenceBatch);
    const torch::Tensor y = G->forward(nn::stack(std::vector<BinaryMask>(masks.begin() + start, masks.begin() + end)));
    for (std::int64_t i = 0; i < y.size(0); ++i) out.push_back(nn::to_gray_image(y[i][0]));
  }
  return out;
}

DatasetManifest synthesize(const GanCheckpoint& checkpoint, const DatasetManifest& masks,
                           const std::filesystem::path& out_dir) {
  DatasetManifest fragment;
  if (masks.empty()) return fragment;
  std::vector<BinaryMask> loaded;
  loaded.reserve(masks.records.size());
  for (const auto& rec : masks.records) {
    if (!std::filesystem::exists(rec.mask)) {
      throw ValidationError("record '" + rec.id + "': mask file '" + rec.mask.string() + "' does not exist");
    }
    loaded.push_back(load_mask(rec.mask));
  }
  const std::vector<GrayImage> images = generate_images(checkpoint, loaded);
  std::filesystem::create_directories(out_dir);
  for (std::size_t i = 0; i < images.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "synth_%06zu.png", i);
    const auto path = out_dir / name;
    try {
      save_image(path, images[i]);
    } catch (const Error& e) {
      throw RuntimeFailure("synth: wrote " + std::to_string(i) + " of " + std::to_string(images.size()) +
                           " images before failing: " + e.what());
    }
    const auto& src = masks.records[i];
    fragment.records.push_back({src.id, path, src.mask, Origin::kSynthetic, src.split});
  }
  return fragment;
}

// ---------------------------------------------------------------------------

SegTrainResult train_seg(const DatasetManifest& real, const DatasetManifest& synthetic,
                         const PipelineConfig& config, const std::filesystem::path& out_dir,
                         const RunOptions& options) {
  if (real.filter(Split::kTrain).empty()) throw ValidationError("train-seg: real manifest has no training pairs");
  return train_seg(load_patch_pairs(real, config.seg.train), load_patch_pairs(synthetic, config.seg.train), config,
                   out_dir, options);
}

SegTrainResult train_seg(const std::vector<PatchPair>& real, const std::vector<PatchPair>& synthetic,
                         const PipelineConfig& config, const std::filesystem::path& out_dir,
                         const RunOptions& options) {
  const TrainConfig& t = config.seg.train;
  config.seg.network.validate_patch(t.patch_size);
  t.validate("seg.train");
  if (real.empty()) throw ValidationError("train-seg: no real training patches");
  check_patch_sizes(real, t.patch_size, "train-seg");
  check_patch_sizes(synthetic, t.patch_size, "train-seg");
  apply_determinism(options);

  const auto batch = static_cast<std::size_t>(t.batch_size);
  const std::size_t n_synth =
      synthetic.empty() ? 0 : std::min(batch, static_cast<std::size_t>(std::ceil(t.mix_ratio * t.batch_size)));
  const std::size_t n_real = batch - n_synth;

  SegTrainResult result;
  result.checkpoint = SegCheckpoint::initialize(config);
  result.checkpoint_path = out_dir / "seg.pt";
  result.log_path = out_dir / "train_log.jsonl";
  std::ofstream log = open_log(result.log_path);

  auto& S = result.checkpoint.segmenter;
  S->train();
  auto opt = make_adam(S->parameters(), t);

  const PatchTensors real_data = to_tensors(real);
  const PatchTensors synth_data = synthetic.empty() ? PatchTensors{} : to_tensors(synthetic);
  EpochSampler real_sampler(real.size(), child_seed(t.seed, kRealSampleStream));
  EpochSampler synth_sampler(synthetic.size(), child_seed(t.seed, kSynthSampleStream));
  const Clock clock(options.deterministic);

  for (int step = 1; step <= t.steps; ++step) {
    std::vector<torch::Tensor> xs, ms;
    if (n_real > 0) {
      const auto idx = torch::tensor(real_sampler.take(n_real), torch::kLong);
      xs.push_back(real_data.images.index_select(0, idx));
      ms.push_back(real_data.masks.index_select(0, idx));
    }
    if (n_synth > 0) {
      const auto idx = torch::tensor(synth_sampler.take(n_synth), torch::kLong);
      xs.push_back(synth_data.images.index_select(0, idx));
      ms.push_back(synth_data.masks.index_select(0, idx));
    }
    torch::Tensor x = torch::cat(xs, 0);
    torch::Tensor m = torch::cat(ms, 0);
    if (t.augment) {
      Rng rng(child_seed(t.seed ^ kAugmentStream, static_cast<std::uint64_t>(step)));
      std::vector<torch::Tensor> ax, am;
      for (std::int64_t i = 0; i < x.size(0); ++i) {
        const auto k = rng.uniform_int(0, 7);
        auto transform = [k](torch::Tensor v) {
          v = torch::rot90(v, k % 4, {1, 2});
          return k >= 4 ? v.flip({2}) : v;
        };
        ax.push_back(transform(x[i]));
        am.push_back(transform(m[i]));
      }
      x = torch::stack(ax, 0).contiguous();
      m = torch::stack(am, 0).contiguous();
    }

    const torch::Tensor loss = torch::binary_cross_entropy_with_logits(S->forward(x), m);
    opt.zero_grad();
    loss.backward();
    opt.step();

    SegLogRecord rec{step, loss.item<double>(), 0.0};
    ensure_finite({rec.bce}, step);
    if (step % t.log_every == 0 || step == t.steps) {
      rec.wall_time = clock.seconds();
      log << rec.to_json() << '\n' << std::flush;
      result.log.push_back(rec);
      if (options.progress) {
        char line[96];
        std::snprintf(line, sizeof line, "train-seg step %d/%d bce=%.5f", step, t.steps, rec.bce);
        options.progress(line);
      }
    }
    if (t.checkpoint_every > 0 && step % t.checkpoint_every == 0 && step != t.steps) {
      result.checkpoint.header.step = step;
      save_checkpoint(result.checkpoint, out_dir / format_step("seg", step));
    }
  }
  result.checkpoint.header.step = t.steps;
  S->eval();
  save_checkpoint(result.checkpoint, result.checkpoint_path);
  return result;
}

}  // namespace filagen
