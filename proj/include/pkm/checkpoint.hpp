#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <zlib.h>

#include <json.hpp>

#include "pkm/errors.hpp"
#include "pkm/matrix.hpp"
#include "pkm/trainer.hpp"

namespace pkm {

static_assert(std::endian::native == std::endian::little,
              "checkpoint format is little-endian; big-endian hosts unsupported");

namespace ckpt {

constexpr char kMagic[8] = {'P', 'K', 'M', 'C', 'K', 'P', 'T', '1'};

enum class SectionKind : uint32_t { Tensor = 0, Json = 1, Text = 2 };

enum class Dtype : uint8_t { F32 = 0, F64 = 1, I64 = 2 };

template <typename T>
constexpr Dtype dtype_of();
template <>
constexpr Dtype dtype_of<float>() {
  return Dtype::F32;
}
template <>
constexpr Dtype dtype_of<double>() {
  return Dtype::F64;
}
template <>
constexpr Dtype dtype_of<int64_t>() {
  return Dtype::I64;
}

inline void put_u32(std::string& buf, uint32_t v) {
  buf.append(reinterpret_cast<const char*>(&v), 4);
}

}  // namespace ckpt

/// Writes the binary checkpoint format: 8-byte magic, a 32-bit section
/// count, then per section a name, kind, payload size, CRC-32 and payload.
/// Tensors carry a dtype byte and 32-bit row-major shape header.
class CheckpointWriter {
 public:
  template <typename T>
  void add_tensor(const std::string& name, const Matrix<T>& m) {
    std::string payload;
    payload.push_back(static_cast<char>(ckpt::dtype_of<T>()));
    ckpt::put_u32(payload, static_cast<uint32_t>(m.rows()));
    ckpt::put_u32(payload, static_cast<uint32_t>(m.cols()));
    payload.append(reinterpret_cast<const char*>(m.data()),
                   static_cast<size_t>(m.size()) * sizeof(T));
    add_section(name, ckpt::SectionKind::Tensor, std::move(payload));
  }

  void add_i64_tensor(const std::string& name, const std::vector<int64_t>& v) {
    std::string payload;
    payload.push_back(static_cast<char>(ckpt::Dtype::I64));
    ckpt::put_u32(payload, 1);
    ckpt::put_u32(payload, static_cast<uint32_t>(v.size()));
    payload.append(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(int64_t));
    add_section(name, ckpt::SectionKind::Tensor, std::move(payload));
  }

  /// Length-prefixed UTF-8 JSON blob.
  void add_json(const std::string& name, const nlohmann::json& j) {
    const std::string text = j.dump();
    std::string payload;
    ckpt::put_u32(payload, static_cast<uint32_t>(text.size()));
    payload += text;
    add_section(name, ckpt::SectionKind::Json, std::move(payload));
  }

  void add_text(const std::string& name, const std::string& text) {
    add_section(name, ckpt::SectionKind::Text, text);
  }

  void write(const std::string& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
    out.write(ckpt::kMagic, sizeof(ckpt::kMagic));
    std::string head;
    ckpt::put_u32(head, static_cast<uint32_t>(sections_.size()));
    out.write(head.data(), static_cast<std::streamsize>(head.size()));
    for (const auto& s : sections_) {
      std::string meta;
      ckpt::put_u32(meta, static_cast<uint32_t>(s.name.size()));
      meta += s.name;
      ckpt::put_u32(meta, static_cast<uint32_t>(s.kind));
      ckpt::put_u32(meta, static_cast<uint32_t>(s.payload.size()));
      ckpt::put_u32(meta, s.crc);
      out.write(meta.data(), static_cast<std::streamsize>(meta.size()));
      out.write(s.payload.data(), static_cast<std::streamsize>(s.payload.size()));
    }
    if (!out) throw std::runtime_error("short write on checkpoint: " + path);
  }

 private:
  struct Section {
    std::string name;
    ckpt::SectionKind kind;
    std::string payload;
    uint32_t crc;
  };

  void add_section(const std::string& name, ckpt::SectionKind kind, std::string payload) {
    const uint32_t crc = static_cast<uint32_t>(
        crc32(0L, reinterpret_cast<const Bytef*>(payload.data()),
              static_cast<uInt>(payload.size())));
    sections_.push_back({name, kind, std::move(payload), crc});
  }

  std::vector<Section> sections_;
};

/// Parses and validates a checkpoint: magic, section table, per-section
/// CRC-32. Tensor reads check shape and dtype against the destination.
class CheckpointReader {
 public:
  explicit CheckpointReader(const std::string& path) : path_(path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CheckpointError(CheckpointError::Kind::BadFormat, "",
                                   "cannot open checkpoint: " + path);
    std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (data.size() < sizeof(ckpt::kMagic) + 4)
      throw CheckpointError(CheckpointError::Kind::Truncated, "header",
                            "checkpoint shorter than its header: " + path);
    if (std::memcmp(data.data(), ckpt::kMagic, sizeof(ckpt::kMagic)) != 0)
      throw CheckpointError(CheckpointError::Kind::BadMagic, "header",
                            "bad checkpoint magic in " + path);
    size_t off = sizeof(ckpt::kMagic);
    const uint32_t count = get_u32(data, off);
    for (uint32_t i = 0; i < count; ++i) {
      const uint32_t name_len = get_u32(data, off);
      if (off + name_len > data.size())
        throw CheckpointError(CheckpointError::Kind::Truncated, "section table",
                              "truncated section name");
      std::string name = data.substr(off, name_len);
      off += name_len;
      const uint32_t kind = get_u32(data, off);
      const uint32_t size = get_u32(data, off);
      const uint32_t crc = get_u32(data, off);
      if (off + size > data.size())
        throw CheckpointError(CheckpointError::Kind::Truncated, name,
                              "truncated payload for section '" + name + "'");
      std::string payload = data.substr(off, size);
      off += size;
      const uint32_t actual = static_cast<uint32_t>(
          crc32(0L, reinterpret_cast<const Bytef*>(payload.data()),
                static_cast<uInt>(payload.size())));
      if (actual != crc)
        throw CheckpointError(CheckpointError::Kind::ChecksumMismatch, name,
                              "checksum mismatch in section '" + name + "'");
      sections_[name] = {static_cast<ckpt::SectionKind>(kind), std::move(payload)};
    }
  }

  bool has(const std::string& name) const { return sections_.count(name) > 0; }

  nlohmann::json read_json(const std::string& name) const {
    const std::string& payload = section(name, ckpt::SectionKind::Json).payload;
    size_t off = 0;
    const uint32_t len = get_u32(payload, off);
    if (off + len > payload.size())
      throw CheckpointError(CheckpointError::Kind::Truncated, name,
                            "truncated JSON blob in '" + name + "'");
    return nlohmann::json::parse(payload.substr(off, len));
  }

  std::string read_text(const std::string& name) const {
    return section(name, ckpt::SectionKind::Text).payload;
  }

  template <typename T>
  void read_tensor_into(const std::string& name, Matrix<T>& dst) const {
    const std::string& payload = section(name, ckpt::SectionKind::Tensor).payload;
    size_t off = 0;
    const auto dtype = static_cast<ckpt::Dtype>(payload.at(0));
    off += 1;
    const uint32_t rows = get_u32(payload, off);
    const uint32_t cols = get_u32(payload, off);
    if (dtype != ckpt::dtype_of<T>())
      throw CheckpointError(CheckpointError::Kind::ShapeMismatch, name,
                            "tensor '" + name + "' has a different dtype");
    if (rows != static_cast<uint32_t>(dst.rows()) ||
        cols != static_cast<uint32_t>(dst.cols()))
      throw CheckpointError(
          CheckpointError::Kind::ShapeMismatch, name,
          "tensor '" + name + "' has shape (" + std::to_string(rows) + ", " +
              std::to_string(cols) + "), expected (" + std::to_string(dst.rows()) +
              ", " + std::to_string(dst.cols()) + ")");
    const size_t bytes = static_cast<size_t>(rows) * cols * sizeof(T);
    if (payload.size() - off != bytes)
      throw CheckpointError(CheckpointError::Kind::Truncated, name,
                            "tensor '" + name + "' payload size mismatch");
    std::memcpy(dst.data(), payload.data() + off, bytes);
  }

  std::vector<int64_t> read_i64_tensor(const std::string& name) const {
    const std::string& payload = section(name, ckpt::SectionKind::Tensor).payload;
    size_t off = 0;
    const auto dtype = static_cast<ckpt::Dtype>(payload.at(0));
    off += 1;
    const uint32_t rows = get_u32(payload, off);
    const uint32_t cols = get_u32(payload, off);
    if (dtype != ckpt::Dtype::I64 || rows != 1)
      throw CheckpointError(CheckpointError::Kind::ShapeMismatch, name,
                            "section '" + name + "' is not an int64 vector");
    std::vector<int64_t> out(cols);
    std::memcpy(out.data(), payload.data() + off, static_cast<size_t>(cols) * 8);
    return out;
  }

 private:
  struct Section {
    ckpt::SectionKind kind;
    std::string payload;
  };

  const Section& section(const std::string& name, ckpt::SectionKind kind) const {
    auto it = sections_.find(name);
    if (it == sections_.end())
      throw CheckpointError(CheckpointError::Kind::MissingSection, name,
                            "missing checkpoint section '" + name + "' in " + path_);
    if (it->second.kind != kind)
      throw CheckpointError(CheckpointError::Kind::BadFormat, name,
                            "section '" + name + "' has unexpected kind");
    return it->second;
  }

  static uint32_t get_u32(const std::string& data, size_t& off) {
    if (off + 4 > data.size())
      throw CheckpointError(CheckpointError::Kind::Truncated, "",
                            "unexpected end of checkpoint data");
    uint32_t v;
    std::memcpy(&v, data.data() + off, 4);
    off += 4;
    return v;
  }

  std::string path_;
  std::map<std::string, Section> sections_;
};

// --- config (de)serialization ----------------------------------------------

inline void to_json(nlohmann::json& j, const MemoryLayerConfig& c) {
  j = {{"d", c.d},         {"dq", c.dq},       {"n_sub", c.n_sub},
       {"heads", c.heads}, {"k", c.k},         {"batch_norm", c.batch_norm},
       {"key_mode", c.key_mode == KeyMode::Product ? "product" : "flat"}};
}

inline void from_json(const nlohmann::json& j, MemoryLayerConfig& c) {
  j.at("d").get_to(c.d);
  j.at("dq").get_to(c.dq);
  j.at("n_sub").get_to(c.n_sub);
  j.at("heads").get_to(c.heads);
  j.at("k").get_to(c.k);
  j.at("batch_norm").get_to(c.batch_norm);
  c.key_mode = j.at("key_mode") == "flat" ? KeyMode::Flat : KeyMode::Product;
}

inline void to_json(nlohmann::json& j, const ModelConfig& c) {
  j = {{"vocab", c.vocab},
       {"n_layers", c.n_layers},
       {"d", c.d},
       {"attn_heads", c.attn_heads},
       {"context", c.context},
       {"memory_positions", c.memory_positions},
       {"mem", c.mem},
       {"seed", c.seed}};
}

inline void from_json(const nlohmann::json& j, ModelConfig& c) {
  j.at("vocab").get_to(c.vocab);
  j.at("n_layers").get_to(c.n_layers);
  j.at("d").get_to(c.d);
  j.at("attn_heads").get_to(c.attn_heads);
  j.at("context").get_to(c.context);
  j.at("memory_positions").get_to(c.memory_positions);
  j.at("mem").get_to(c.mem);
  j.at("seed").get_to(c.seed);
}

inline void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = {{"model", c.model},     {"batch", c.batch},
       {"steps", c.steps},     {"lr", c.lr},
       {"warmup", c.warmup},   {"value_lr", c.value_lr},
       {"beta1", c.beta1},     {"beta2", c.beta2},
       {"adam_eps", c.adam_eps}, {"clip_norm", c.clip_norm}};
}

inline void from_json(const nlohmann::json& j, TrainConfig& c) {
  j.at("model").get_to(c.model);
  j.at("batch").get_to(c.batch);
  j.at("steps").get_to(c.steps);
  j.at("lr").get_to(c.lr);
  j.at("warmup").get_to(c.warmup);
  j.at("value_lr").get_to(c.value_lr);
  j.at("beta1").get_to(c.beta1);
  j.at("beta2").get_to(c.beta2);
  j.at("adam_eps").get_to(c.adam_eps);
  j.at("clip_norm").get_to(c.clip_norm);
}

// --- whole-train-state persistence ------------------------------------------

template <typename T>
inline void save_checkpoint(const std::string& path, TrainState<T>& state) {
  CheckpointWriter w;
  nlohmann::json config;
  config["train"] = state.config;
  config["precision"] = std::is_same_v<T, double> ? "f64" : "f32";
  config["step"] = state.step;
  w.add_json("config", config);

  for (const auto& p : state.model.params()) w.add_tensor(p.name, *p.value);
  for (const auto& b : state.model.buffers()) w.add_tensor(b.name, *b.value);

  auto params = state.model.params();
  auto& m = state.optimizer.slots_m();
  auto& v = state.optimizer.slots_v();
  for (size_t i = 0; i < params.size(); ++i) {
    w.add_tensor("opt.m." + params[i].name, m[i]);
    w.add_tensor("opt.v." + params[i].name, v[i]);
  }
  w.add_i64_tensor("opt.step", {state.optimizer.step_count()});

  for (size_t l = 0; l < state.model.blocks().size(); ++l) {
    auto& block = state.model.blocks()[l];
    if (!block.is_memory) continue;
    const std::string p = "layer" + std::to_string(l) + ".mem.values";
    w.add_tensor(p, block.mem.values().values());
    w.add_tensor(p + ".m", block.mem.values().moments_m());
    w.add_tensor(p + ".v", block.mem.values().moments_v());
    w.add_i64_tensor(p + ".steps", block.mem.values().steps());
  }

  w.add_text("rng.data", state.data_rng.serialize());

  nlohmann::json history = nlohmann::json::array();
  for (const auto& e : state.history)
    history.push_back({{"step", e.step}, {"loss", e.loss}, {"lr", e.lr}});
  w.add_json("history", history);

  w.write(path);
}

/// Reads just the config blob, so callers can dispatch on precision before
/// instantiating the typed load.
inline nlohmann::json peek_checkpoint_config(const std::string& path) {
  return CheckpointReader(path).read_json("config");
}

template <typename T>
inline TrainState<T> load_checkpoint(const std::string& path) {
  CheckpointReader r(path);
  const nlohmann::json config = r.read_json("config");
  const std::string precision = config.at("precision");
  const std::string expect = std::is_same_v<T, double> ? "f64" : "f32";
  if (precision != expect)
    throw CheckpointError(CheckpointError::Kind::BadFormat, "config",
                          "checkpoint precision is " + precision + ", expected " + expect);

  TrainConfig tc = config.at("train").get<TrainConfig>();
  TrainState<T> state = TrainState<T>::init(tc);
  state.step = config.at("step").get<int64_t>();

  for (const auto& p : state.model.params()) r.read_tensor_into(p.name, *p.value);
  for (const auto& b : state.model.buffers()) r.read_tensor_into(b.name, *b.value);

  auto params = state.model.params();
  for (size_t i = 0; i < params.size(); ++i) {
    r.read_tensor_into("opt.m." + params[i].name, state.optimizer.slots_m()[i]);
    r.read_tensor_into("opt.v." + params[i].name, state.optimizer.slots_v()[i]);
  }
  state.optimizer.set_step_count(r.read_i64_tensor("opt.step").at(0));

  for (size_t l = 0; l < state.model.blocks().size(); ++l) {
    auto& block = state.model.blocks()[l];
    if (!block.is_memory) continue;
    const std::string p = "layer" + std::to_string(l) + ".mem.values";
    r.read_tensor_into(p, block.mem.values().values_mut());
    r.read_tensor_into(p + ".m", block.mem.values().moments_m_mut());
    r.read_tensor_into(p + ".v", block.mem.values().moments_v_mut());
    block.mem.values().steps_mut() = r.read_i64_tensor(p + ".steps");
  }

  state.data_rng.deserialize(r.read_text("rng.data"));

  state.history.clear();
  for (const auto& e : r.read_json("history"))
    state.history.push_back(
        {e.at("step").get<int64_t>(), e.at("loss").get<double>(), e.at("lr").get<double>()});
  return state;
}

}  // namespace pkm
