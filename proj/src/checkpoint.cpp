#include "filagen/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "filagen/error.hpp"

namespace filagen {

using json = nlohmann::json;

namespace {

constexpr const char* kGanKind = "gan";
constexpr const char* kSegKind = "seg";

// Networks draw their initial weights from streams derived from the run seed.
constexpr std::uint64_t kGeneratorStream = 0x67656e;
constexpr std::uint64_t kDiscriminatorStream = 0x646973;
constexpr std::uint64_t kSegmenterStream = 0x736567;

std::filesystem::path stem_of(const std::filesystem::path& path) {
  const auto ext = path.extension();
  if (ext == ".pt" || ext == ".json") return std::filesystem::path(path).replace_extension();
  return path;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open checkpoint file '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_header(const CheckpointHeader& header, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << header.to_json();
  if (!out) throw RuntimeFailure("cannot write checkpoint header '" + path.string() + "'");
}

void write_payload(torch::serialize::OutputArchive& archive, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  try {
    archive.save_to(path.string());
  } catch (const c10::Error&) {
    throw RuntimeFailure("cannot write checkpoint '" + path.string() + "'");
  }
}

struct Payload {
  std::string kind;
  PipelineConfig config;
  CheckpointHeader header;
  torch::serialize::InputArchive archive;
};

std::string read_string(torch::serialize::InputArchive& archive, const char* key) {
  c10::IValue value;
  archive.read(key, value);
  return value.toStringRef();
}

void open_payload(const std::filesystem::path& path, const char* expected_kind, Payload& out) {
  const auto payload = checkpoint_payload_path(path);
  const auto header_path = checkpoint_header_path(path);
  if (!std::filesystem::exists(payload)) {
    throw ValidationError("checkpoint not found: '" + payload.string() + "'");
  }
  out.header = CheckpointHeader::from_json(read_text(header_path));
  std::string config_text;
  try {
    out.archive.load_from(payload.string());
    out.kind = read_string(out.archive, "kind");
    config_text = read_string(out.archive, "config");
  } catch (const c10::Error&) {
    throw ValidationError("cannot read checkpoint '" + payload.string() + "'");
  }
  if (out.kind != expected_kind) {
    throw ValidationError("checkpoint '" + payload.string() + "' holds a " + out.kind + " model, expected " +
                          expected_kind);
  }
  out.config = PipelineConfig::from_json(config_text, PipelineConfig::desk_scale());
  if (out.config.hash() != out.header.config_hash) {
    throw ValidationError("checkpoint '" + payload.string() + "': header hash does not match stored config");
  }
}

void load_module(torch::serialize::InputArchive& archive, const char* key, torch::nn::Module& module,
                 const std::filesystem::path& path) {
  torch::serialize::InputArchive sub;
  try {
    archive.read(key, sub);
    module.load(sub);
  } catch (const c10::Error&) {
    throw ValidationError("checkpoint '" + path.string() + "': parameters do not match the stored config");
  }
}

torch::serialize::OutputArchive start_payload(const char* kind, const PipelineConfig& config) {
  torch::serialize::OutputArchive archive;
  archive.write("kind", c10::IValue(std::string(kind)));
  PipelineConfig stored = config;
  stored.workdir.clear();
  stored.real_manifest.clear();
  archive.write("config", c10::IValue(stored.to_json()));
  return archive;
}

void add_module(torch::serialize::OutputArchive& archive, const char* key, const torch::nn::Module& module) {
  torch::serialize::OutputArchive sub;
  module.save(sub);
  archive.write(key, sub);
}

}  // namespace

// ---------------------------------------------------------------------------

std::string CheckpointHeader::to_json() const {
  json doc{{"config_hash", config_hash}, {"format_version", format_version}, {"seed", seed}, {"step", step}};
  return doc.dump() + "\n";
}

CheckpointHeader CheckpointHeader::from_json(const std::string& text) {
  try {
    const json doc = json::parse(text);
    CheckpointHeader h;
    h.config_hash = doc.at("config_hash").get<std::string>();
    h.format_version = doc.at("format_version").get<int>();
    h.seed = doc.at("seed").get<std::uint64_t>();
    h.step = doc.at("step").get<std::int64_t>();
    if (h.format_version != kFormatVersion) {
      throw ValidationError("unsupported checkpoint format version " + std::to_string(h.format_version));
    }
    return h;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed checkpoint header: ") + e.what());
  }
}

std::filesystem::path checkpoint_payload_path(const std::filesystem::path& path) {
  return stem_of(path).concat(".pt");
}

std::filesystem::path checkpoint_header_path(const std::filesystem::path& path) {
  return stem_of(path).concat(".json");
}

std::string checkpoint_id(const std::string& kind, const CheckpointHeader& header) {
  return kind + "-" + header.config_hash.substr(0, 12) + "-step" + std::to_string(header.step);
}

// ---------------------------------------------------------------------------

GanCheckpoint GanCheckpoint::initialize(const PipelineConfig& config) {
  GanCheckpoint c;
  c.config = config;
  c.generator = nn::Generator(config.gan.generator);
  c.discriminator = nn::Discriminator(config.gan.discriminator);
  nn::init_weights(*c.generator, config.gan.train.seed ^ kGeneratorStream);
  nn::init_weights(*c.discriminator, config.gan.train.seed ^ kDiscriminatorStream);
  c.header.config_hash = config.hash();
  c.header.seed = config.gan.train.seed;
  return c;
}

SegCheckpoint SegCheckpoint::initialize(const PipelineConfig& config) {
  SegCheckpoint c;
  c.config = config;
  c.segmenter = nn::Segmenter(config.seg.network);
  nn::init_weights(*c.segmenter, config.seg.train.seed ^ kSegmenterStream);
  c.header.config_hash = config.hash();
  c.header.seed = config.seg.train.seed;
  return c;
}

void save_checkpoint(const GanCheckpoint& ckpt, const std::filesystem::path& path) {
  auto archive = start_payload(kGanKind, ckpt.config);
  add_module(archive, "generator", *ckpt.generator);
  add_module(archive, "discriminator", *ckpt.discriminator);
  write_payload(archive, checkpoint_payload_path(path));
  write_header(ckpt.header, checkpoint_header_path(path));
}

void save_checkpoint(const SegCheckpoint& ckpt, const std::filesystem::path& path) {
  auto archive = start_payload(kSegKind, ckpt.config);
  add_module(archive, "segmenter", *ckpt.segmenter);
  write_payload(archive, checkpoint_payload_path(path));
  write_header(ckpt.header, checkpoint_header_path(path));
}

GanCheckpoint load_gan_checkpoint(const std::filesystem::path& path) {
  Payload p;
  open_payload(path, kGanKind, p);
  GanCheckpoint c;
  c.config = p.config;
  c.header = p.header;
  c.generator = nn::Generator(c.config.gan.generator);
  c.discriminator = nn::Discriminator(c.config.gan.discriminator);
  load_module(p.archive, "generator", *c.generator, path);
  load_module(p.archive, "discriminator", *c.discriminator, path);
  return c;
}

SegCheckpoint load_seg_checkpoint(const std::filesystem::path& path) {
  Payload p;
  open_payload(path, kSegKind, p);
  SegCheckpoint c;
  c.config = p.config;
  c.header = p.header;
  c.segmenter = nn::Segmenter(c.config.seg.network);
  load_module(p.archive, "segmenter", *c.segmenter, path);
  return c;
}

}  // namespace filagen
