// Copyright 2026 The edgecrack Authors
// SPDX-License-Identifier: Apache-2.0

#include "edgecrack/enef.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <set>

#include <zlib.h>

#include "edgecrack/error.hpp"
#include "edgecrack/model_io.hpp"

namespace edgecrack::enef {

std::uint32_t crc32(std::span<const std::uint8_t> bytes) noexcept {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  const std::uint8_t* p = bytes.data();
  std::size_t left = bytes.size();
  while (left > 0) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(left, 1u << 30));
    crc = ::crc32(crc, p, chunk);
    p += chunk;
    left -= chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

namespace {

enum class Tag : std::uint32_t {
  Meta = 0x4154454Du,     // "META"
  Graph = 0x48505247u,    // "GRPH"
  QParams = 0x4D525051u,  // "QPRM"
  Weights = 0x38544757u,  // "WGT8"
  Biases = 0x32334942u,   // "BI32"
  Requant = 0x544E5152u,  // "RQNT"
};

constexpr std::array<Tag, kSectionCount> kSectionOrder{Tag::Meta, Tag::Graph, Tag::QParams,
                                                       Tag::Weights, Tag::Biases, Tag::Requant};

enum class KindCode : std::uint8_t { Conv2D = 0, MaxPool2D = 1, Relu = 2, Flatten = 3, Dense = 4, Softmax = 5 };

class Writer {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) { put(v, 2); }
  void u32(std::uint32_t v) { put(v, 4); }
  void i32(std::int32_t v) { put(static_cast<std::uint32_t>(v), 4); }
  void f64(double v) { put(std::bit_cast<std::uint64_t>(v), 8); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    out_.insert(out_.end(), s.begin(), s.end());
  }
  void bytes(std::span<const std::uint8_t> b) { out_.insert(out_.end(), b.begin(), b.end()); }
  void pad_to(std::size_t alignment) {
    while (out_.size() % alignment != 0) out_.push_back(0);
  }
  void patch_u32(std::size_t at, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_[at + i] = static_cast<std::uint8_t>(v >> (8 * i));
  }
  std::size_t size() const { return out_.size(); }
  std::vector<std::uint8_t>& buffer() { return out_; }

 private:
  void put(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(get(1)); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(get(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  std::int32_t i32() { return static_cast<std::int32_t>(static_cast<std::uint32_t>(get(4))); }
  double f64() { return std::bit_cast<double>(get(8)); }
  std::string str() {
    const std::uint32_t n = u32();
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  std::span<const std::uint8_t> take(std::size_t n) {
    need(n);
    auto s = bytes_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  /// Reads an element count and checks it could fit in the remaining bytes.
  std::uint32_t count(std::size_t min_entry_bytes) {
    const std::uint32_t n = u32();
    if (static_cast<std::uint64_t>(n) * min_entry_bytes > remaining()) {
      throw Error(Errc::TruncatedSection, "count " + std::to_string(n) + " exceeds section size");
    }
    return n;
  }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (n > remaining()) throw Error(Errc::TruncatedSection, "read past end of section");
  }
  std::uint64_t get(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= std::uint64_t{bytes_[pos_ + i]} << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

[[noreturn]] void malformed(const std::string& what) { throw Error(Errc::MalformedTable, what); }

KindCode kind_code(const OpKind& kind) { return static_cast<KindCode>(kind.index()); }

// ---- section encoders ---------------------------------------------------

void write_meta(Writer& w, const Metadata& m) {
  w.str(m.model_name);
  w.str(m.profile_name);
}

void write_graph(Writer& w, const ModelGraph& g) {
  w.str(g.name);
  w.u32(static_cast<std::uint32_t>(g.tensors.size()));
  for (const auto& [id, t] : g.tensors) {
    w.str(id);
    w.u8(static_cast<std::uint8_t>(t.dtype));
    w.u8(static_cast<std::uint8_t>(t.shape.size()));
    for (auto d : t.shape) w.u32(static_cast<std::uint32_t>(d));
  }
  w.str(g.input_id);
  w.str(g.output_id);
  w.u32(static_cast<std::uint32_t>(g.nodes.size()));
  for (const auto& node : g.nodes) {
    w.str(node.id);
    w.u8(static_cast<std::uint8_t>(kind_code(node.kind)));
    if (const auto* c = std::get_if<Conv2D>(&node.kind)) {
      w.u32(static_cast<std::uint32_t>(c->stride));
      w.u8(static_cast<std::uint8_t>(c->padding));
    } else if (const auto* p = std::get_if<MaxPool2D>(&node.kind)) {
      w.u32(static_cast<std::uint32_t>(p->window));
      w.u32(static_cast<std::uint32_t>(p->stride));
    }
    w.u8(static_cast<std::uint8_t>(node.inputs.size()));
    for (const auto& in : node.inputs) w.str(in);
    w.str(node.output);
  }
}

void write_qparams(Writer& w, const QuantizedModel& qm) {
  for (const auto* table : {&qm.act_qparams, &qm.weight_qparams}) {
    w.u32(static_cast<std::uint32_t>(table->size()));
    for (const auto& [id, p] : *table) {
      w.str(id);
      w.f64(p.scale);
      w.i32(p.zero_point);
    }
  }
}

void write_weights(Writer& w, const QuantizedModel& qm) {
  w.u32(static_cast<std::uint32_t>(qm.weight_q.size()));
  for (const auto& [id, data] : qm.weight_q) {
    w.str(id);
    w.u32(static_cast<std::uint32_t>(data.size()));
    w.bytes(std::span(reinterpret_cast<const std::uint8_t*>(data.data()), data.size()));
  }
}

void write_biases(Writer& w, const QuantizedModel& qm) {
  w.u32(static_cast<std::uint32_t>(qm.bias_q.size()));
  for (const auto& [id, data] : qm.bias_q) {
    w.str(id);
    w.u32(static_cast<std::uint32_t>(data.size()));
    for (auto v : data) w.i32(v);
  }
}

void write_requant(Writer& w, const QuantizedModel& qm) {
  w.u32(static_cast<std::uint32_t>(qm.requant.size()));
  for (const auto& [id, m] : qm.requant) {
    w.str(id);
    w.i32(m.m0);
    w.i32(m.shift);
  }
}

// ---- section decoders ---------------------------------------------------

constexpr std::size_t kMinString = 4;

void read_meta(Reader& r, Metadata& m) {
  m.model_name = r.str();
  m.profile_name = r.str();
}

void read_graph(Reader& r, ModelGraph& g) {
  g.name = r.str();
  const std::uint32_t n_tensors = r.count(kMinString + 2);
  for (std::uint32_t i = 0; i < n_tensors; ++i) {
    TensorSpec t;
    t.id = r.str();
    const std::uint8_t dtype = r.u8();
    if (dtype > static_cast<std::uint8_t>(DataType::I32)) malformed("tensor '" + t.id + "' has unknown dtype");
    t.dtype = static_cast<DataType>(dtype);
    const std::uint8_t rank = r.u8();
    if (rank != 1 && rank != 2 && rank != 4) malformed("tensor '" + t.id + "' has rank " + std::to_string(rank));
    for (std::uint8_t d = 0; d < rank; ++d) t.shape.push_back(r.u32());
    if (!g.tensors.emplace(t.id, t).second) malformed("tensor '" + t.id + "' listed twice");
  }
  g.input_id = r.str();
  g.output_id = r.str();
  const std::uint32_t n_nodes = r.count(kMinString + 2 + kMinString);
  for (std::uint32_t i = 0; i < n_nodes; ++i) {
    NodeSpec node;
    node.id = r.str();
    const std::uint8_t code = r.u8();
    switch (static_cast<KindCode>(code)) {
      case KindCode::Conv2D: {
        Conv2D c;
        c.stride = static_cast<int>(r.u32());
        const std::uint8_t pad = r.u8();
        if (pad > 1) malformed("node '" + node.id + "' has unknown padding");
        c.padding = static_cast<Padding>(pad);
        if (c.stride < 1 || c.stride > 1024) malformed("node '" + node.id + "' has a bad stride");
        node.kind = c;
        break;
      }
      case KindCode::MaxPool2D: {
        MaxPool2D p;
        p.window = static_cast<int>(r.u32());
        p.stride = static_cast<int>(r.u32());
        if (p.window < 1 || p.window > 1024 || p.stride < 1 || p.stride > 1024) {
          malformed("node '" + node.id + "' has a bad pooling window");
        }
        node.kind = p;
        break;
      }
      case KindCode::Relu: node.kind = Relu{}; break;
      case KindCode::Flatten: node.kind = Flatten{}; break;
      case KindCode::Dense: node.kind = Dense{}; break;
      case KindCode::Softmax: node.kind = Softmax{}; break;
      default: malformed("node '" + node.id + "' has unknown kind " + std::to_string(code));
    }
    const std::uint8_t n_inputs = r.u8();
    if (n_inputs > 3) malformed("node '" + node.id + "' has too many inputs");
    for (std::uint8_t k = 0; k < n_inputs; ++k) node.inputs.push_back(r.str());
    node.output = r.str();
    g.nodes.push_back(std::move(node));
  }
}

void read_qparams(Reader& r, QuantizedModel& qm) {
  for (auto* table : {&qm.act_qparams, &qm.weight_qparams}) {
    const std::uint32_t n = r.count(kMinString + 12);
    for (std::uint32_t i = 0; i < n; ++i) {
      std::string id = r.str();
      QuantParams p;
      p.scale = r.f64();
      p.zero_point = r.i32();
      if (!table->emplace(std::move(id), p).second) malformed("qparams listed twice");
    }
  }
}

void read_weights(Reader& r, QuantizedModel& qm) {
  const std::uint32_t n = r.count(kMinString + 4);
  for (std::uint32_t i = 0; i < n; ++i) {
    std::string id = r.str();
    const std::uint32_t len = r.u32();
    const auto raw = r.take(len);
    std::vector<std::int8_t> data(len);
    if (len > 0) std::memcpy(data.data(), raw.data(), len);
    if (!qm.weight_q.emplace(std::move(id), std::move(data)).second) malformed("weight listed twice");
  }
}

void read_biases(Reader& r, QuantizedModel& qm) {
  const std::uint32_t n = r.count(kMinString + 4);
  for (std::uint32_t i = 0; i < n; ++i) {
    std::string id = r.str();
    const std::uint32_t len = r.u32();
    if (static_cast<std::uint64_t>(len) * 4 > r.remaining()) {
      throw Error(Errc::TruncatedSection, "bias '" + id + "' runs past its section");
    }
    std::vector<std::int32_t> data(len);
    for (auto& v : data) v = r.i32();
    if (!qm.bias_q.emplace(std::move(id), std::move(data)).second) malformed("bias listed twice");
  }
}

void read_requant(Reader& r, QuantizedModel& qm) {
  const std::uint32_t n = r.count(kMinString + 8);
  for (std::uint32_t i = 0; i < n; ++i) {
    std::string id = r.str();
    RequantMultiplier m;
    m.m0 = r.i32();
    m.shift = r.i32();
    if (!qm.requant.emplace(std::move(id), m).second) malformed("requant listed twice");
  }
}

std::uint32_t load_u32(std::span<const std::uint8_t> b, std::size_t at) {
  return std::uint32_t{b[at]} | std::uint32_t{b[at + 1]} << 8 | std::uint32_t{b[at + 2]} << 16 |
         std::uint32_t{b[at + 3]} << 24;
}

}  // namespace

std::vector<std::uint8_t> pack(const QuantizedModel& qm, const Metadata& metadata) {
  const auto problems = check_quantized_model(qm);
  if (!problems.empty()) throw Error(Errc::InvariantViolation, problems.front());

  Writer w;
  w.bytes(std::span(reinterpret_cast<const std::uint8_t*>("ENEF"), 4));
  w.u16(kVersion);
  w.u16(0);  // flags
  w.u32(static_cast<std::uint32_t>(kSectionCount));
  w.u32(0);  // total size, patched below

  const std::size_t directory = w.size();
  for (std::size_t i = 0; i < kSectionCount; ++i) {
    w.u32(static_cast<std::uint32_t>(kSectionOrder[i]));
    w.u32(0);  // reserved
    w.u32(0);  // offset
    w.u32(0);  // length
  }

  for (std::size_t i = 0; i < kSectionCount; ++i) {
    w.pad_to(kAlignment);
    const std::size_t begin = w.size();
    switch (kSectionOrder[i]) {
      case Tag::Meta: write_meta(w, metadata); break;
      case Tag::Graph: write_graph(w, qm.graph); break;
      case Tag::QParams: write_qparams(w, qm); break;
      case Tag::Weights: write_weights(w, qm); break;
      case Tag::Biases: write_biases(w, qm); break;
      case Tag::Requant: write_requant(w, qm); break;
    }
    const std::size_t entry = directory + i * kDirectoryEntrySize;
    w.patch_u32(entry + 8, static_cast<std::uint32_t>(begin));
    w.patch_u32(entry + 12, static_cast<std::uint32_t>(w.size() - begin));
  }
  w.pad_to(kAlignment);
  w.patch_u32(12, static_cast<std::uint32_t>(w.size() + 4));
  const std::uint32_t crc = crc32(w.buffer());
  w.u32(crc);
  return std::move(w.buffer());
}

Archive unpack(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), "ENEF", 4) != 0) {
    throw Error(Errc::BadMagic, "not an ENEF archive");
  }
  if (bytes.size() < kHeaderSize) throw Error(Errc::TruncatedSection, "header cut short");
  const std::uint16_t version = static_cast<std::uint16_t>(bytes[4] | bytes[5] << 8);
  if (version != kVersion) throw Error(Errc::UnsupportedVersion, "version " + std::to_string(version));
  const std::uint32_t total = load_u32(bytes, 12);
  if (total > bytes.size()) {
    throw Error(Errc::TruncatedSection, "archive declares " + std::to_string(total) + " bytes, have " +
                                            std::to_string(bytes.size()));
  }
  if (total < bytes.size()) malformed("trailing bytes after archive end");
  const std::size_t body = bytes.size() - 4;
  if (crc32(bytes.first(body)) != load_u32(bytes, body)) {
    throw Error(Errc::ChecksumMismatch, "CRC-32 does not match contents");
  }

  const std::uint32_t sections = load_u32(bytes, 8);
  if (sections != kSectionCount) malformed("expected 6 sections, found " + std::to_string(sections));
  const std::size_t table_end = kHeaderSize + kSectionCount * kDirectoryEntrySize;
  if (body < table_end) throw Error(Errc::TruncatedSection, "section directory cut short");

  Archive archive;
  std::size_t prev_end = table_end;
  for (std::size_t i = 0; i < kSectionCount; ++i) {
    const std::size_t entry = kHeaderSize + i * kDirectoryEntrySize;
    if (load_u32(bytes, entry) != static_cast<std::uint32_t>(kSectionOrder[i])) {
      malformed("section " + std::to_string(i) + " has an unexpected tag");
    }
    const std::size_t offset = load_u32(bytes, entry + 8);
    const std::size_t length = load_u32(bytes, entry + 12);
    if (offset % kAlignment != 0 || offset < prev_end) malformed("section offsets out of order or unaligned");
    if (offset > body || length > body - offset) throw Error(Errc::TruncatedSection, "section runs past end");
    prev_end = offset + length;

    Reader r(bytes.subspan(offset, length));
    switch (kSectionOrder[i]) {
      case Tag::Meta: read_meta(r, archive.metadata); break;
      case Tag::Graph: read_graph(r, archive.model.graph); break;
      case Tag::QParams: read_qparams(r, archive.model); break;
      case Tag::Weights: read_weights(r, archive.model); break;
      case Tag::Biases: read_biases(r, archive.model); break;
      case Tag::Requant: read_requant(r, archive.model); break;
    }
    if (r.remaining() != 0) malformed("section " + std::to_string(i) + " has trailing bytes");
  }

  const auto problems = check_quantized_model(archive.model);
  if (!problems.empty()) malformed(problems.front());
  return archive;
}

void write_archive(const std::filesystem::path& path, const QuantizedModel& qm, const Metadata& metadata) {
  write_file(path, pack(qm, metadata));
}

Archive read_archive(const std::filesystem::path& path) { return unpack(read_file(path)); }

}  // namespace edgecrack::enef
