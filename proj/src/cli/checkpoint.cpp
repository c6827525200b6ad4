#include "skilltree/cli/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace skilltree::cli {

namespace {

constexpr char kMagic[4] = {'S', 'K', 'T', 'R'};

template <class U>
void put_le(std::vector<std::uint8_t>& out, U v) {
  for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  template <class U>
  U get(const std::string& where) {
    need(sizeof(U), where);
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(static_cast<U>(bytes_[pos_ + i]) << (8 * i));
    pos_ += sizeof(U);
    return v;
  }
  std::string str(std::size_t n, const std::string& where) {
    need(n, where);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  std::size_t pos() const noexcept { return pos_; }

 private:
  void need(std::size_t n, const std::string& where) {
    if (bytes_.size() - pos_ < n) throw CheckpointError(where, "file is truncated");
  }
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

std::size_t table_size(const std::vector<Checkpoint::Section>& sections) {
  std::size_t n = 4 + 4 + 4;
  for (const auto& s : sections) n += 2 + s.name.size() + 1 + 4 + 4 + 8 + 8;
  return n;
}

}  // namespace

void Checkpoint::put_tensor(const std::string& name, const diffcore::Tensor& t) {
  Section s;
  s.name = name;
  s.kind = Kind::f32;
  s.rows = static_cast<std::uint32_t>(t.rows);
  s.cols = static_cast<std::uint32_t>(t.cols);
  s.payload.reserve(t.size() * 4);
  for (float v : t.data) put_le(s.payload, std::bit_cast<std::uint32_t>(v));
  const auto it = std::find_if(sections_.begin(), sections_.end(), [&](const Section& x) { return x.name == name; });
  if (it != sections_.end()) *it = std::move(s);
  else sections_.push_back(std::move(s));
}

void Checkpoint::put_text(const std::string& name, const std::string& text) {
  Section s;
  s.name = name;
  s.kind = Kind::text;
  s.rows = 1;
  s.cols = static_cast<std::uint32_t>(text.size());
  s.payload.assign(text.begin(), text.end());
  const auto it = std::find_if(sections_.begin(), sections_.end(), [&](const Section& x) { return x.name == name; });
  if (it != sections_.end()) *it = std::move(s);
  else sections_.push_back(std::move(s));
}

bool Checkpoint::has(const std::string& name) const {
  return std::any_of(sections_.begin(), sections_.end(), [&](const Section& s) { return s.name == name; });
}

const Checkpoint::Section& Checkpoint::find(const std::string& name) const {
  for (const auto& s : sections_)
    if (s.name == name) return s;
  throw CheckpointError(name, "section is missing");
}

diffcore::Tensor Checkpoint::tensor(const std::string& name) const {
  const Section& s = find(name);
  if (s.kind != Kind::f32) throw CheckpointError(name, "section is not a float array");
  diffcore::Tensor t(static_cast<int>(s.rows), static_cast<int>(s.cols));
  for (std::size_t i = 0; i < t.size(); ++i) {
    std::uint32_t bits = 0;
    for (std::size_t b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(s.payload[4 * i + b]) << (8 * b);
    t.data[i] = std::bit_cast<float>(bits);
  }
  return t;
}

diffcore::Tensor Checkpoint::tensor(const std::string& name, int rows, int cols) const {
  auto t = tensor(name);
  if (t.rows != rows || t.cols != cols)
    throw CheckpointError(name, "shape " + std::to_string(t.rows) + "x" + std::to_string(t.cols) + " but expected " +
                                    std::to_string(rows) + "x" + std::to_string(cols));
  return t;
}

std::string Checkpoint::text(const std::string& name) const {
  const Section& s = find(name);
  if (s.kind != Kind::text) throw CheckpointError(name, "section is not text");
  return {s.payload.begin(), s.payload.end()};
}

std::vector<std::uint8_t> Checkpoint::serialize() const {
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  put_le(out, kVersion);
  put_le(out, static_cast<std::uint32_t>(sections_.size()));
  std::uint64_t offset = table_size(sections_);
  for (const auto& s : sections_) {
    put_le(out, static_cast<std::uint16_t>(s.name.size()));
    out.insert(out.end(), s.name.begin(), s.name.end());
    out.push_back(static_cast<std::uint8_t>(s.kind));
    put_le(out, s.rows);
    put_le(out, s.cols);
    put_le(out, offset);
    put_le(out, static_cast<std::uint64_t>(s.payload.size()));
    offset += s.payload.size();
  }
  for (const auto& s : sections_) out.insert(out.end(), s.payload.begin(), s.payload.end());
  return out;
}

Checkpoint Checkpoint::parse(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  if (r.str(4, "header") != std::string(kMagic, 4)) throw CheckpointError("header", "bad magic, not a checkpoint");
  const auto version = r.get<std::uint32_t>("header");
  if (version != kVersion)
    throw CheckpointError("header", "format version " + std::to_string(version) + " is not supported (expected " +
                                        std::to_string(kVersion) + ")");
  const auto count = r.get<std::uint32_t>("header");
  if (count > bytes.size()) throw CheckpointError("header", "section count is implausible");

  struct Entry {
    Section section;
    std::uint64_t offset;
    std::uint64_t length;
  };
  std::vector<Entry> entries;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string where = "table entry " + std::to_string(i);
    const auto len = r.get<std::uint16_t>(where);
    Entry e;
    e.section.name = r.str(len, where);
    const auto kind = r.get<std::uint8_t>(e.section.name);
    if (kind > 1) throw CheckpointError(e.section.name, "unknown section kind");
    e.section.kind = static_cast<Kind>(kind);
    e.section.rows = r.get<std::uint32_t>(e.section.name);
    e.section.cols = r.get<std::uint32_t>(e.section.name);
    e.offset = r.get<std::uint64_t>(e.section.name);
    e.length = r.get<std::uint64_t>(e.section.name);
    for (const auto& prev : entries)
      if (prev.section.name == e.section.name) throw CheckpointError(e.section.name, "duplicate section");
    entries.push_back(std::move(e));
  }

  std::uint64_t expected = r.pos();
  Checkpoint c;
  for (auto& e : entries) {
    const auto& name = e.section.name;
    const std::uint64_t want = e.section.kind == Kind::f32
                                   ? static_cast<std::uint64_t>(e.section.rows) * e.section.cols * 4
                                   : static_cast<std::uint64_t>(e.section.cols);
    if (e.section.kind == Kind::text && e.section.rows != 1) throw CheckpointError(name, "text section must have one row");
    if (e.length != want) throw CheckpointError(name, "payload length does not match its shape");
    if (e.offset != expected) throw CheckpointError(name, "payload offset is out of place");
    if (e.offset > bytes.size() || bytes.size() - e.offset < e.length) throw CheckpointError(name, "payload is truncated");
    e.section.payload.assign(bytes.begin() + static_cast<std::ptrdiff_t>(e.offset),
                             bytes.begin() + static_cast<std::ptrdiff_t>(e.offset + e.length));
    expected += e.length;
    c.sections_.push_back(std::move(e.section));
  }
  if (expected != bytes.size()) throw CheckpointError("trailer", "unexpected bytes after the last section");
  return c;
}

void Checkpoint::save(const std::filesystem::path& path) const {
  const auto bytes = serialize();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write checkpoint '" + path.string() + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing checkpoint '" + path.string() + "'");
}

Checkpoint Checkpoint::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("file", "cannot open '" + path.string() + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse(bytes);
}

}  // namespace skilltree::cli
