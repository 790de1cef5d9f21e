#include "filagen/cli.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <CLI11.hpp>

#include <cstdlib>
#include <optional>
#include <ostream>
#include <thread>

#include "filagen/checkpoint.hpp"
#include "filagen/config.hpp"
#include "filagen/error.hpp"
#include "filagen/inference.hpp"
#include "filagen/manifest.hpp"
#include "filagen/maskgen.hpp"
#include "filagen/png_io.hpp"
#include "filagen/training.hpp"

namespace filagen {

namespace fs = std::filesystem;

namespace {

constexpr const char* kManifestName = "manifest.json";

struct GlobalOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  bool deterministic = false;
  bool desk_scale = false;
  std::string workdir;
};

struct Context {
  PipelineConfig config;
  fs::path workdir;
  RunOptions run;
  std::ostream& out;
  std::ostream& err;
};

/// Defaults (desk or full), then the config file, then forced desk geometry,
/// then the seed flag.
PipelineConfig resolve_config(const GlobalOptions& g) {
  const PipelineConfig base = g.desk_scale ? PipelineConfig::desk_scale() : PipelineConfig::full_scale();
  PipelineConfig cfg = g.config.empty() ? base : PipelineConfig::load(g.config, base);
  if (g.desk_scale) cfg.apply_desk_scale();
  if (g.seed) cfg.set_seed(*g.seed);
  cfg.validate();
  return cfg;
}

fs::path resolve_workdir(const GlobalOptions& g, const PipelineConfig& cfg) {
  if (!g.workdir.empty()) return g.workdir;
  if (!cfg.workdir.empty()) return cfg.workdir;
  if (const char* env = std::getenv("FILAGEN_WORKDIR"); env != nullptr && *env != '\0') return env;
  return ".";
}

fs::path or_default(const std::string& value, const fs::path& fallback) {
  return value.empty() ? fallback : fs::path(value);
}

fs::path require_real_manifest(const std::string& flag, const PipelineConfig& cfg) {
  if (!flag.empty()) return flag;
  if (!cfg.real_manifest.empty()) return cfg.real_manifest;
  throw ValidationError("no real manifest given (use --real/--manifest or paths.real_manifest)");
}

int worker_count() { return static_cast<int>(std::max(1u, std::thread::hardware_concurrency())); }

/// Exclusive advisory lock on `<workdir>/.filagen.lock` for the process lifetime.
class WorkdirLock {
 public:
  explicit WorkdirLock(const fs::path& workdir) {
    fs::create_directories(workdir);
    const auto path = workdir / ".filagen.lock";
    fd_ = ::open(path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
    if (fd_ < 0) throw RuntimeFailure("cannot create lock file '" + path.string() + "'");
    if (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
      ::close(fd_);
      throw RuntimeFailure("another pipeline is running in '" + workdir.string() + "'");
    }
  }
  ~WorkdirLock() {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
  WorkdirLock(const WorkdirLock&) = delete;
  WorkdirLock& operator=(const WorkdirLock&) = delete;

 private:
  int fd_ = -1;
};

// ---------------------------------------------------------------------------
// Stages. Each one is what its subcommand runs; `pipeline` chains them.

fs::path stage_masks(Context& ctx, std::size_t count, const fs::path& out_dir) {
  const DatasetManifest fragment = generate_mask_corpus(ctx.config.maskgen, count, out_dir, worker_count());
  fs::create_directories(out_dir);
  const fs::path manifest = out_dir / kManifestName;
  fragment.save(manifest);
  ctx.out << "masks: wrote " << fragment.records.size() << " masks to " << out_dir.string() << "\n";
  return manifest;
}

fs::path stage_train_gan(Context& ctx, const fs::path& real_manifest, const fs::path& out_dir) {
  const DatasetManifest real = validate_manifest(real_manifest, ManifestKind::kPaired);
  const GanTrainResult result = train_gan(real, ctx.config, out_dir, ctx.run);
  ctx.out << "train-gan: " << checkpoint_id("gan", result.checkpoint.header) << " -> "
          << result.checkpoint_path.string() << "\n";
  return result.checkpoint_path;
}

fs::path stage_synth(Context& ctx, const fs::path& checkpoint, const fs::path& masks_manifest,
                     const fs::path& out_dir) {
  const GanCheckpoint gan = load_gan_checkpoint(checkpoint);
  const DatasetManifest masks = validate_manifest(masks_manifest, ManifestKind::kMaskOnly);
  const DatasetManifest fragment = synthesize(gan, masks, out_dir);
  // The paired fragment replaces the mask-only one so each file stays listed once.
  fragment.save(masks_manifest);
  ctx.out << "synth: wrote " << fragment.records.size() << " images to " << out_dir.string() << "\n";
  return masks_manifest;
}

fs::path stage_train_seg(Context& ctx, const fs::path& real_manifest, const std::optional<fs::path>& synthetic,
                         const fs::path& out_dir) {
  const DatasetManifest real = validate_manifest(real_manifest, ManifestKind::kPaired);
  const DatasetManifest synth =
      synthetic ? validate_manifest(*synthetic, ManifestKind::kPaired) : DatasetManifest{};
  const SegTrainResult result = train_seg(real, synth, ctx.config, out_dir, ctx.run);
  ctx.out << "train-seg: " << checkpoint_id("seg", result.checkpoint.header) << " -> "
          << result.checkpoint_path.string() << "\n";
  return result.checkpoint_path;
}

void stage_eval(Context& ctx, const fs::path& checkpoint, const fs::path& manifest, const fs::path& report_path) {
  const SegCheckpoint seg = load_seg_checkpoint(checkpoint);
  const DatasetManifest real = validate_manifest(manifest, ManifestKind::kPaired);
  const MetricsReport report = evaluate(seg, real, ctx.config.tolerance);
  report.save(report_path);
  ctx.out << "eval: " << report.per_image.size() << " images, mean IoU " << report.mean_iou << ", mean SKIoU "
          << report.mean_skiou << " -> " << report_path.string() << "\n";
}

void stage_preview(Context& ctx, const fs::path& manifest, const std::optional<fs::path>& segmenter,
                   const std::optional<fs::path>& generator, const fs::path& out) {
  GrayImage montage;
  if (generator) {
    const GanCheckpoint gan = load_gan_checkpoint(*generator);
    montage = preview_montage(gan, validate_manifest(manifest, ManifestKind::kMaskOnly));
  } else {
    const DatasetManifest pairs = validate_manifest(manifest, ManifestKind::kPaired);
    if (segmenter) {
      const SegCheckpoint seg = load_seg_checkpoint(*segmenter);
      montage = preview_montage(pairs, &seg);
    } else {
      montage = preview_montage(pairs);
    }
  }
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  save_image(out, montage);
  ctx.out << "preview: " << montage.width() << "x" << montage.height() << " montage -> " << out.string() << "\n";
}

void stage_pipeline(Context& ctx, const fs::path& real_manifest) {
  const WorkdirLock lock(ctx.workdir);
  const fs::path masks_dir = ctx.workdir / "masks";
  const fs::path masks = stage_masks(ctx, ctx.config.mask_count, masks_dir);
  const fs::path gan = stage_train_gan(ctx, real_manifest, ctx.workdir / "gan");
  const fs::path synthetic = stage_synth(ctx, gan, masks, masks_dir);
  const fs::path seg = stage_train_seg(ctx, real_manifest, synthetic, ctx.workdir / "seg");
  stage_eval(ctx, seg, real_manifest, ctx.workdir / "report.json");
  stage_preview(ctx, synthetic, seg, std::nullopt, ctx.workdir / "preview.png");
}

std::optional<fs::path> optional_path(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return fs::path(s);
}

}  // namespace

// ---------------------------------------------------------------------------

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Synthetic filament data: masks, conditional GAN, segmentation, evaluation", "filagen"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions g;
  app.add_option("--config", g.config, "Pipeline config JSON")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "Seed for every stage (overrides config)");
  app.add_flag("--deterministic", g.deterministic, "Single-threaded math and zero wall_time in logs");
  app.add_flag("--desk-scale", g.desk_scale, "Reduced profile: 64 px patches, small networks");
  app.add_option("--workdir", g.workdir, "Working directory (default: config, then $FILAGEN_WORKDIR, then .)");

  std::size_t mask_count = 0;
  std::string masks_out;
  auto* masks = app.add_subcommand("masks", "Generate a procedural mask corpus");
  masks->add_option("-n,--count", mask_count, "Number of masks (default: maskgen.count)");
  masks->add_option("--out", masks_out, "Output directory (default: <workdir>/masks)");

  std::string gan_manifest, gan_out;
  auto* train_gan_cmd = app.add_subcommand("train-gan", "Train the mask-to-image GAN on real pairs");
  train_gan_cmd->add_option("--manifest", gan_manifest, "Real dataset manifest (default: paths.real_manifest)");
  train_gan_cmd->add_option("--out", gan_out, "Output directory (default: <workdir>/gan)");

  std::string synth_ckpt, synth_masks, synth_out;
  auto* synth = app.add_subcommand("synth", "Render images for a mask fragment with a trained generator");
  synth->add_option("--checkpoint", synth_ckpt, "GAN checkpoint (default: <workdir>/gan/gan.pt)");
  synth->add_option("--masks", synth_masks, "Mask fragment (default: <workdir>/masks/manifest.json)");
  synth->add_option("--out", synth_out, "Image directory (default: next to the masks)");

  std::string seg_real, seg_synth, seg_out;
  auto* train_seg_cmd = app.add_subcommand("train-seg", "Train the segmenter on real and synthetic pairs");
  train_seg_cmd->add_option("--real", seg_real, "Real dataset manifest (default: paths.real_manifest)");
  train_seg_cmd->add_option("--synthetic", seg_synth, "Synthetic paired fragment (optional)");
  train_seg_cmd->add_option("--out", seg_out, "Output directory (default: <workdir>/seg)");

  std::string eval_ckpt, eval_manifest, eval_out;
  auto* eval = app.add_subcommand("eval", "Score a segmenter on the test split");
  eval->add_option("--checkpoint", eval_ckpt, "Segmenter checkpoint (default: <workdir>/seg/seg.pt)");
  eval->add_option("--manifest", eval_manifest, "Dataset manifest (default: paths.real_manifest)");
  eval->add_option("--out", eval_out, "Report path (default: <workdir>/report.json)");

  std::string preview_manifest, preview_seg, preview_gan, preview_out;
  auto* preview = app.add_subcommand("preview", "Write a montage of masks, images and predictions");
  preview->add_option("--manifest", preview_manifest, "Paired or mask fragment (default: <workdir>/masks/manifest.json)");
  preview->add_option("--checkpoint", preview_seg, "Segmenter checkpoint for a prediction column");
  preview->add_option("--generator", preview_gan, "GAN checkpoint: render images from the masks");
  preview->add_option("--out", preview_out, "PNG path (default: <workdir>/preview.png)");

  std::string pipeline_real;
  auto* pipeline = app.add_subcommand("pipeline", "Run masks, train-gan, synth, train-seg, eval and preview");
  pipeline->add_option("--real", pipeline_real, "Real dataset manifest (default: paths.real_manifest)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitSuccess : kExitUsage;
  }

  try {
    const PipelineConfig cfg = resolve_config(g);
    Context ctx{cfg, resolve_workdir(g, cfg), {}, out, err};
    ctx.run.deterministic = g.deterministic;
    ctx.run.progress = [&err](const std::string& line) { err << line << "\n" << std::flush; };
    const fs::path& w = ctx.workdir;

    if (masks->parsed()) {
      stage_masks(ctx, masks->count("--count") ? mask_count : cfg.mask_count, or_default(masks_out, w / "masks"));
    } else if (train_gan_cmd->parsed()) {
      stage_train_gan(ctx, require_real_manifest(gan_manifest, cfg), or_default(gan_out, w / "gan"));
    } else if (synth->parsed()) {
      const fs::path fragment = or_default(synth_masks, w / "masks" / kManifestName);
      stage_synth(ctx, or_default(synth_ckpt, w / "gan" / "gan.pt"), fragment,
                  or_default(synth_out, fragment.parent_path().empty() ? fs::path(".") : fragment.parent_path()));
    } else if (train_seg_cmd->parsed()) {
      stage_train_seg(ctx, require_real_manifest(seg_real, cfg), optional_path(seg_synth),
                      or_default(seg_out, w / "seg"));
    } else if (eval->parsed()) {
      stage_eval(ctx, or_default(eval_ckpt, w / "seg" / "seg.pt"), require_real_manifest(eval_manifest, cfg),
                 or_default(eval_out, w / "report.json"));
    } else if (preview->parsed()) {
      stage_preview(ctx, or_default(preview_manifest, w / "masks" / kManifestName), optional_path(preview_seg),
                    optional_path(preview_gan), or_default(preview_out, w / "preview.png"));
    } else if (pipeline->parsed()) {
      stage_pipeline(ctx, require_real_manifest(pipeline_real, cfg));
    }
    return kExitSuccess;
  } catch (const ManifestError& e) {
    err << "error: manifest validation failed\n";
    for (const auto& issue : e.issues()) err << "  " << issue.record_id << ": " << issue.message << "\n";
    return kExitValidation;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const RuntimeFailure& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  } catch (const c10::Error& e) {
    err << "error: " << e.what_without_backtrace() << "\n";
    return kExitRuntime;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

}  // namespace filagen
