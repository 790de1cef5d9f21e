#include "filagen/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "filagen/digest.hpp"
#include "filagen/error.hpp"

namespace filagen {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Network configs

int GeneratorConfig::channels(int stage) const {
  return base_channels * (stage >= 3 ? 8 : (1 << stage));
}

void GeneratorConfig::validate() const {
  if (depth < 2 || depth > 12) throw ConfigError("gan.generator.depth", "must lie in [2, 12]");
  if (base_channels < 1) throw ConfigError("gan.generator.base_channels", "must be >= 1");
}

void GeneratorConfig::validate_patch(int patch_size) const {
  validate();
  const int factor = 1 << depth;
  if (patch_size < factor || patch_size % factor != 0) {
    throw ConfigError("gan.train.patch_size",
                      "patch side " + std::to_string(patch_size) + " is not a positive multiple of 2^" +
                          std::to_string(depth) + " = " + std::to_string(factor));
  }
}

int DiscriminatorConfig::receptive_field() const {
  int field = 4;  // classifier, stride 1
  for (int stage = layers - 1; stage >= 0; --stage) {
    const int stride = stage == layers - 1 ? 1 : 2;
    field = (field - 1) * stride + 4;
  }
  return field;
}

int DiscriminatorConfig::output_size(int input_size) const {
  int size = input_size;
  for (int stage = 0; stage < layers; ++stage) {
    const int stride = stage == layers - 1 ? 1 : 2;
    size = (size + 2 - 4) / stride + 1;
  }
  return size + 2 - 4 + 1;
}

void DiscriminatorConfig::validate() const {
  if (layers < 1 || layers > 8) throw ConfigError("gan.discriminator.layers", "must lie in [1, 8]");
  if (base_channels < 1) throw ConfigError("gan.discriminator.base_channels", "must be >= 1");
}

void SegmenterConfig::validate() const {
  if (depth < 1 || depth > 8) throw ConfigError("seg.network.depth", "must lie in [1, 8]");
  if (base_channels < 1) throw ConfigError("seg.network.base_channels", "must be >= 1");
}

void SegmenterConfig::validate_patch(int patch_size) const {
  validate();
  const int factor = 1 << depth;
  if (patch_size < factor || patch_size % factor != 0) {
    throw ConfigError("seg.train.patch_size", "patch side " + std::to_string(patch_size) +
                                                  " is not a positive multiple of 2^" +
                                                  std::to_string(depth));
  }
}

void TrainConfig::validate(const std::string& section) const {
  auto fail = [&](const char* field, const char* message) {
    throw ConfigError(section + "." + field, message);
  };
  if (!(learning_rate > 0.0)) fail("learning_rate", "must be > 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) fail("beta1", "must lie in [0, 1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) fail("beta2", "must lie in [0, 1)");
  if (batch_size < 1) fail("batch_size", "must be >= 1");
  if (steps < 0) fail("steps", "must be >= 0");
  if (patch_size < 1) fail("patch_size", "must be >= 1");
  if (patch_stride < 0) fail("patch_stride", "must be >= 0");
  if (!(min_foreground >= 0.0 && min_foreground <= 1.0)) fail("min_foreground", "must lie in [0, 1]");
  if (!(loss_weights.lambda_l1 >= 0.0)) fail("loss_weights.lambda_l1", "must be >= 0");
  if (!(loss_weights.lambda_s >= 0.0)) fail("loss_weights.lambda_s", "must be >= 0");
  if (!(mix_ratio >= 0.0 && mix_ratio <= 1.0)) fail("mix_ratio", "must lie in [0, 1]");
  if (log_every < 1) fail("log_every", "must be >= 1");
  if (checkpoint_every < 0) fail("checkpoint_every", "must be >= 0");
  try {
    morph.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(section + "." + e.field(), e.what());
  }
}

// ---------------------------------------------------------------------------
// Profiles

PipelineConfig PipelineConfig::full_scale() {
  PipelineConfig cfg;
  cfg.maskgen = MaskGenConfig::for_preset(FilamentPreset::kMicrotubule);
  cfg.seg.train.steps = 20000;
  return cfg;
}

PipelineConfig PipelineConfig::desk_scale() {
  PipelineConfig cfg = full_scale();
  cfg.apply_desk_scale();
  cfg.mask_count = 64;
  cfg.gan.train.steps = 1500;
  cfg.seg.train.steps = 1500;
  return cfg;
}

void PipelineConfig::apply_desk_scale() {
  constexpr int kPatch = 64;
  gan.generator.depth = 6;
  gan.generator.base_channels = 16;
  gan.discriminator.base_channels = 16;
  gan.train.batch_size = 4;
  gan.train.patch_size = kPatch;
  seg.network.depth = 4;
  seg.network.base_channels = 16;
  seg.train.batch_size = 4;
  seg.train.patch_size = kPatch;
  const MaskGenConfig scaled = MaskGenConfig::for_preset(maskgen.preset, kPatch, kPatch, maskgen.seed);
  maskgen.height = scaled.height;
  maskgen.width = scaled.width;
  maskgen.count = scaled.count;
}

void PipelineConfig::set_seed(std::uint64_t seed) {
  maskgen.seed = seed;
  gan.train.seed = seed;
  seg.train.seed = seed;
}

void PipelineConfig::validate() const {
  maskgen.validate();
  gan.generator.validate_patch(gan.train.patch_size);
  gan.discriminator.validate();
  if (gan.discriminator.output_size(gan.train.patch_size) < 1) {
    throw ConfigError("gan.discriminator.layers", "too deep for the patch size");
  }
  gan.train.validate("gan.train");
  seg.network.validate_patch(seg.train.patch_size);
  seg.train.validate("seg.train");
  if (maskgen.height != gan.train.patch_size || maskgen.width != gan.train.patch_size) {
    throw ConfigError("maskgen.height", "mask canvas must equal gan.train.patch_size");
  }
  if (tolerance < 0) throw ConfigError("metrics.tolerance", "must be >= 0");
}

// ---------------------------------------------------------------------------
// JSON

namespace {

json range_json(const auto& r) { return json::array({r.min, r.max}); }

json train_json(const TrainConfig& t) {
  return {{"learning_rate", t.learning_rate},
          {"beta1", t.beta1},
          {"beta2", t.beta2},
          {"batch_size", t.batch_size},
          {"steps", t.steps},
          {"patch_size", t.patch_size},
          {"patch_stride", t.patch_stride},
          {"min_foreground", t.min_foreground},
          {"seed", t.seed},
          {"loss_weights", {{"lambda_l1", t.loss_weights.lambda_l1}, {"lambda_s", t.loss_weights.lambda_s}}},
          {"morph",
           {{"soft_iterations", t.morph.soft_iterations},
            {"sharpness", t.morph.sharpness},
            {"threshold", t.morph.threshold}}},
          {"mix_ratio", t.mix_ratio},
          {"augment", t.augment},
          {"log_every", t.log_every},
          {"checkpoint_every", t.checkpoint_every}};
}

json pipeline_json(const PipelineConfig& c, bool with_paths) {
  const auto& m = c.maskgen;
  json doc{{"maskgen",
            {{"height", m.height},
             {"width", m.width},
             {"count_range", range_json(m.count)},
             {"step_length", m.step_length},
             {"length_range", range_json(m.length)},
             {"max_turn", m.max_turn},
             {"thickness_range", range_json(m.thickness)},
             {"seed", m.seed},
             {"preset", to_string(m.preset)},
             {"count", c.mask_count}}},
           {"gan",
            {{"generator", {{"depth", c.gan.generator.depth}, {"base_channels", c.gan.generator.base_channels}}},
             {"discriminator",
              {{"layers", c.gan.discriminator.layers}, {"base_channels", c.gan.discriminator.base_channels}}},
             {"train", train_json(c.gan.train)}}},
           {"seg",
            {{"network", {{"depth", c.seg.network.depth}, {"base_channels", c.seg.network.base_channels}}},
             {"train", train_json(c.seg.train)}}},
           {"metrics", {{"tolerance", c.tolerance}}}};
  if (with_paths) {
    doc["paths"] = {{"workdir", c.workdir.string()}, {"real_manifest", c.real_manifest.string()}};
  }
  return doc;
}

// Strict reader for one JSON object. Every key must be consumed.
class Section {
 public:
  Section(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "must be an object");
  }

  Section child(const char* key) {
    consumed_.insert(key);
    static const json kEmpty = json::object();
    return Section(obj_.contains(key) ? obj_.at(key) : kEmpty, field(key));
  }

  void read(const char* key, int& out) { read_integer(key, out); }
  void read(const char* key, std::uint64_t& out) { read_integer(key, out); }

  void read(const char* key, double& out) {
    if (const json* v = find(key)) {
      if (!v->is_number()) throw ConfigError(field(key), "expected a number");
      out = v->get<double>();
    }
  }

  void read(const char* key, bool& out) {
    if (const json* v = find(key)) {
      if (!v->is_boolean()) throw ConfigError(field(key), "expected true or false");
      out = v->get<bool>();
    }
  }

  void read(const char* key, std::string& out) {
    if (const json* v = find(key)) {
      if (!v->is_string()) throw ConfigError(field(key), "expected a string");
      out = v->get<std::string>();
    }
  }

  template <typename T>
  void read(const char* key, Range<T>& out) {
    if (const json* v = find(key)) {
      if (!v->is_array() || v->size() != 2) throw ConfigError(field(key), "expected [min, max]");
      T lo = out.min;
      T hi = out.max;
      check_element<T>((*v)[0], key);
      check_element<T>((*v)[1], key);
      lo = (*v)[0].get<T>();
      hi = (*v)[1].get<T>();
      out = {lo, hi};
    }
  }

  void finish() const {
    for (const auto& [key, value] : obj_.items()) {
      if (!consumed_.contains(key)) throw ConfigError(field(key), "unknown field");
    }
  }

 private:
  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const json* find(const char* key) {
    consumed_.insert(key);
    return obj_.contains(key) ? &obj_.at(key) : nullptr;
  }

  template <typename T>
  void read_integer(const char* key, T& out) {
    if (const json* v = find(key)) {
      if (!v->is_number_integer()) throw ConfigError(field(key), "expected an integer");
      if constexpr (std::is_unsigned_v<T>) {
        if (!v->is_number_unsigned()) throw ConfigError(field(key), "expected a nonnegative integer");
      }
      out = v->get<T>();
    }
  }

  template <typename T>
  void check_element(const json& v, const char* key) const {
    if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw ConfigError(field(key), "expected integer bounds");
    } else {
      if (!v.is_number()) throw ConfigError(field(key), "expected numeric bounds");
    }
  }

  const json& obj_;
  std::string path_;
  std::set<std::string> consumed_;
};

void read_train(Section s, TrainConfig& t) {
  s.read("learning_rate", t.learning_rate);
  s.read("beta1", t.beta1);
  s.read("beta2", t.beta2);
  s.read("batch_size", t.batch_size);
  s.read("steps", t.steps);
  s.read("patch_size", t.patch_size);
  s.read("patch_stride", t.patch_stride);
  s.read("min_foreground", t.min_foreground);
  s.read("seed", t.seed);
  {
    Section w = s.child("loss_weights");
    w.read("lambda_l1", t.loss_weights.lambda_l1);
    w.read("lambda_s", t.loss_weights.lambda_s);
    w.finish();
  }
  {
    Section m = s.child("morph");
    m.read("soft_iterations", t.morph.soft_iterations);
    m.read("sharpness", t.morph.sharpness);
    m.read("threshold", t.morph.threshold);
    m.finish();
  }
  s.read("mix_ratio", t.mix_ratio);
  s.read("augment", t.augment);
  s.read("log_every", t.log_every);
  s.read("checkpoint_every", t.checkpoint_every);
  s.finish();
}

}  // namespace

std::string PipelineConfig::to_json() const { return pipeline_json(*this, true).dump(2) + "\n"; }

PipelineConfig PipelineConfig::from_json(const std::string& text, const PipelineConfig& base) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError("<root>", std::string("not valid JSON: ") + e.what());
  }

  PipelineConfig cfg = base;
  Section root(doc, "");
  {
    Section m = root.child("maskgen");
    m.read("height", cfg.maskgen.height);
    m.read("width", cfg.maskgen.width);
    m.read("count_range", cfg.maskgen.count);
    m.read("step_length", cfg.maskgen.step_length);
    m.read("length_range", cfg.maskgen.length);
    m.read("max_turn", cfg.maskgen.max_turn);
    m.read("thickness_range", cfg.maskgen.thickness);
    m.read("seed", cfg.maskgen.seed);
    std::string preset = to_string(cfg.maskgen.preset);
    m.read("preset", preset);
    cfg.maskgen.preset = parse_preset(preset);
    if (doc.contains("maskgen") && doc["maskgen"].contains("preset") &&
        !doc["maskgen"].contains("count_range")) {
      cfg.maskgen.count = MaskGenConfig::for_preset(cfg.maskgen.preset, cfg.maskgen.height,
                                                    cfg.maskgen.width)
                              .count;
    }
    std::uint64_t count = cfg.mask_count;
    m.read("count", count);
    cfg.mask_count = count;
    m.finish();
  }
  {
    Section g = root.child("gan");
    {
      Section n = g.child("generator");
      n.read("depth", cfg.gan.generator.depth);
      n.read("base_channels", cfg.gan.generator.base_channels);
      n.finish();
    }
    {
      Section n = g.child("discriminator");
      n.read("layers", cfg.gan.discriminator.layers);
      n.read("base_channels", cfg.gan.discriminator.base_channels);
      n.finish();
    }
    read_train(g.child("train"), cfg.gan.train);
    g.finish();
  }
  {
    Section s = root.child("seg");
    {
      Section n = s.child("network");
      n.read("depth", cfg.seg.network.depth);
      n.read("base_channels", cfg.seg.network.base_channels);
      n.finish();
    }
    read_train(s.child("train"), cfg.seg.train);
    s.finish();
  }
  {
    Section m = root.child("metrics");
    m.read("tolerance", cfg.tolerance);
    m.finish();
  }
  {
    Section p = root.child("paths");
    std::string workdir = cfg.workdir.string();
    std::string real = cfg.real_manifest.string();
    p.read("workdir", workdir);
    p.read("real_manifest", real);
    cfg.workdir = workdir;
    cfg.real_manifest = real;
    p.finish();
  }
  root.finish();
  return cfg;
}

PipelineConfig PipelineConfig::load(const std::filesystem::path& path, const PipelineConfig& base) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  PipelineConfig cfg = from_json(buffer.str(), base);
  // Relative paths inside a config file are relative to that file.
  const auto base_dir = path.parent_path();
  if (!cfg.workdir.empty() && cfg.workdir.is_relative() && cfg.workdir != base.workdir) {
    cfg.workdir = base_dir / cfg.workdir;
  }
  if (!cfg.real_manifest.empty() && cfg.real_manifest.is_relative() &&
      cfg.real_manifest != base.real_manifest) {
    cfg.real_manifest = base_dir / cfg.real_manifest;
  }
  return cfg;
}

std::string canonical_hash(const std::string& json_text) {
  return sha256_hex(json::parse(json_text).dump());
}

std::string PipelineConfig::hash() const { return sha256_hex(pipeline_json(*this, false).dump()); }

}  // namespace filagen
