#include "ctrforge/checkpoint.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "ctrforge/errors.hpp"
#include "json.hpp"

namespace ctrforge {

namespace {

constexpr char kMagic[4] = {'C', 'T', 'R', 'F'};
constexpr char kTrailer[4] = {'C', 'E', 'N', 'D'};

class ByteWriter {
 public:
  void raw(const void* p, size_t n) { buf_.append(static_cast<const char*>(p), n); }
  void u8(uint8_t v) { raw(&v, 1); }
  void u32(uint32_t v) {
    for (int i = 0; i < 4; ++i) u8(static_cast<uint8_t>(v >> (8 * i)));
  }
  void u64(uint64_t v) {
    for (int i = 0; i < 8; ++i) u8(static_cast<uint8_t>(v >> (8 * i)));
  }
  void f32(float v) { u32(std::bit_cast<uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<uint64_t>(v)); }
  void str(const std::string& s) {
    u32(static_cast<uint32_t>(s.size()));
    raw(s.data(), s.size());
  }
  std::string take() { return std::move(buf_); }

 private:
  std::string buf_;
};

class ByteReader {
 public:
  ByteReader(const std::string& buf, const std::string& origin)
      : buf_(buf), origin_(origin) {}

  void raw(void* p, size_t n) {
    if (pos_ + n > buf_.size())
      throw DataError("checkpoint truncated: " + origin_);
    std::memcpy(p, buf_.data() + pos_, n);
    pos_ += n;
  }
  uint8_t u8() {
    uint8_t v;
    raw(&v, 1);
    return v;
  }
  uint32_t u32() {
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(u8()) << (8 * i);
    return v;
  }
  uint64_t u64() {
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(u8()) << (8 * i);
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    uint32_t n = u32();
    if (pos_ + n > buf_.size())
      throw DataError("checkpoint truncated: " + origin_);
    std::string s(buf_.data() + pos_, n);
    pos_ += n;
    return s;
  }
  size_t pos() const { return pos_; }
  size_t remaining() const { return buf_.size() - pos_; }
  const std::string& origin() const { return origin_; }

 private:
  const std::string& buf_;
  std::string origin_;
  size_t pos_ = 0;
};

nlohmann::json config_to_json(const ModelConfig& cfg) {
  return {{"architecture", cfg.architecture},
          {"embedding_dim", cfg.embedding_dim},
          {"hidden", cfg.hidden},
          {"activation", cfg.activation},
          {"dropout", cfg.dropout},
          {"cin_layers", cfg.cin_layers},
          {"attention_head_size", cfg.attention_head_size},
          {"attention_heads", cfg.attention_heads}};
}

ModelConfig config_from_json(const nlohmann::json& j) {
  ModelConfig cfg;
  cfg.architecture = j.at("architecture").get<std::string>();
  cfg.embedding_dim = j.at("embedding_dim").get<int>();
  cfg.hidden = j.at("hidden").get<std::vector<int>>();
  cfg.activation = j.at("activation").get<std::string>();
  cfg.dropout = j.at("dropout").get<double>();
  cfg.cin_layers = j.at("cin_layers").get<std::vector<int>>();
  cfg.attention_head_size = j.at("attention_head_size").get<int>();
  cfg.attention_heads = j.at("attention_heads").get<int>();
  cfg.validate();
  return cfg;
}

}  // namespace

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  ByteWriter w;
  w.raw(kMagic, 4);
  w.u32(kCheckpointVersion);
  w.u64(ckpt.space.fingerprint());
  w.str(config_to_json(ckpt.config).dump());

  const auto& fields = ckpt.space.schema.fields();
  w.u32(static_cast<uint32_t>(fields.size()));
  for (const auto& f : fields) {
    w.str(f.name);
    w.u8(static_cast<uint8_t>(f.kind));
  }

  w.u32(static_cast<uint32_t>(ckpt.space.vocabs.size()));
  for (const auto& [name, vocab] : ckpt.space.vocabs) {
    w.str(name);
    w.u32(static_cast<uint32_t>(vocab.known_values().size()));
    for (const auto& v : vocab.known_values()) w.str(v);
  }

  w.u32(static_cast<uint32_t>(ckpt.space.stats.size()));
  for (const auto& [name, st] : ckpt.space.stats) {
    w.str(name);
    w.f64(st.mean);
    w.f64(st.stddev);
  }

  w.u32(static_cast<uint32_t>(ckpt.params.size()));
  for (const auto& [name, t] : ckpt.params) {
    w.str(name);
    const auto& shape = t.shape();
    w.u32(static_cast<uint32_t>(shape.size()));
    for (int d : shape) w.u32(static_cast<uint32_t>(d));
    for (float v : t.vec()) w.f32(v);
  }

  w.raw(kTrailer, 4);
  return w.take();
}

Checkpoint deserialize_checkpoint(const std::string& bytes, const std::string& origin) {
  ByteReader r(bytes, origin);
  char magic[4];
  r.raw(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0)
    throw DataError("not a checkpoint file (bad magic): " + origin);
  uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    char msg[128];
    std::snprintf(msg, sizeof(msg), "checkpoint version %u unsupported (this build reads version %u)",
                  version, kCheckpointVersion);
    throw DataError(std::string(msg) + ": " + origin);
  }
  uint64_t stored_fp = r.u64();

  Checkpoint ckpt;
  ckpt.config = config_from_json(nlohmann::json::parse(r.str()));

  uint32_t n_fields = r.u32();
  std::vector<FieldSpec> fields;
  for (uint32_t i = 0; i < n_fields; ++i) {
    FieldSpec f;
    f.name = r.str();
    f.kind = static_cast<FieldKind>(r.u8());
    fields.push_back(std::move(f));
  }
  ckpt.space.schema = FeatureSchema(std::move(fields));

  uint32_t n_vocabs = r.u32();
  for (uint32_t i = 0; i < n_vocabs; ++i) {
    std::string name = r.str();
    uint32_t n = r.u32();
    std::vector<std::string> values;
    values.reserve(n);
    for (uint32_t j = 0; j < n; ++j) values.push_back(r.str());
    ckpt.space.vocabs[name] = FieldVocab::from_values(std::move(values));
  }

  uint32_t n_stats = r.u32();
  for (uint32_t i = 0; i < n_stats; ++i) {
    std::string name = r.str();
    NumericStats st;
    st.mean = r.f64();
    st.stddev = r.f64();
    ckpt.space.stats[name] = st;
  }

  uint32_t n_params = r.u32();
  for (uint32_t i = 0; i < n_params; ++i) {
    std::string name = r.str();
    uint32_t rank = r.u32();
    std::vector<int> shape;
    int64_t elems = 1;
    for (uint32_t d = 0; d < rank; ++d) {
      shape.push_back(static_cast<int>(r.u32()));
      elems *= shape.back();
    }
    if (elems < 0 || elems > static_cast<int64_t>(r.remaining()) / 4 + 1)
      throw DataError("checkpoint truncated: " + origin);
    Tensor t = Tensor::zeros(shape);
    for (float& v : t.vec()) v = r.f32();
    ckpt.params[name] = std::move(t);
  }

  char trailer[4];
  r.raw(trailer, 4);
  if (std::memcmp(trailer, kTrailer, 4) != 0)
    throw DataError("checkpoint corrupt (bad trailer): " + origin);
  if (r.remaining() != 0)
    throw DataError("checkpoint corrupt (trailing bytes): " + origin);

  if (ckpt.space.fingerprint() != stored_fp) {
    char msg[160];
    std::snprintf(msg, sizeof(msg),
                  "checkpoint fingerprint %016llx does not match its own contents %016llx",
                  static_cast<unsigned long long>(stored_fp),
                  static_cast<unsigned long long>(ckpt.space.fingerprint()));
    throw DataError(std::string(msg) + ": " + origin);
  }
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open checkpoint for writing: " + path);
  std::string bytes = serialize_checkpoint(ckpt);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  out.flush();
  if (!out) throw DataError("checkpoint write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize_checkpoint(ss.str(), path);
}

}  // namespace ctrforge
