#include "lrnerv/container.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <stdexcept>

namespace lrnerv {
namespace {

constexpr char kMagic[4] = {'L', 'R', 'N', 'V'};

class Writer {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) { put_le(v, 2); }
  void u32(std::uint32_t v) { put_le(v, 4); }
  void f32(float v) { put_le(std::bit_cast<std::uint32_t>(v), 4); }
  void f64(double v) { put_le(std::bit_cast<std::uint64_t>(v), 8); }
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  void put_le(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(get_le(1)); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(get_le(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(get_le(4)); }
  float f32() { return std::bit_cast<float>(static_cast<std::uint32_t>(get_le(4))); }
  double f64() { return std::bit_cast<double>(get_le(8)); }
  std::span<const std::uint8_t> bytes(std::size_t n) {
    need(n);
    auto s = in_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  bool at_end() const { return pos_ == in_.size(); }
  std::size_t remaining() const { return in_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) throw std::runtime_error("LRNV container: truncated payload");
  }
  std::uint64_t get_le(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(in_[pos_ + i]) << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }

  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

}  // namespace

const TensorRecord* Container::find(const std::string& name) const {
  for (const auto& r : records) {
    if (r.name == name) return &r;
  }
  return nullptr;
}

std::vector<std::uint8_t> encode_container(const Container& c) {
  Writer w;
  w.bytes(kMagic, 4);
  w.u32(kContainerVersion);
  w.u32(static_cast<std::uint32_t>(c.metadata.size()));
  w.bytes(c.metadata.data(), c.metadata.size());
  w.u32(static_cast<std::uint32_t>(c.records.size()));
  for (const TensorRecord& r : c.records) {
    if (r.name.size() > 0xFFFF) throw std::invalid_argument("tensor name too long: " + r.name);
    w.u16(static_cast<std::uint16_t>(r.name.size()));
    w.bytes(r.name.data(), r.name.size());
    w.u8(static_cast<std::uint8_t>(r.dtype));
    w.u8(static_cast<std::uint8_t>(r.shape.size()));
    for (std::size_t d : r.shape) w.u32(static_cast<std::uint32_t>(d));
    const std::size_t n = numel(r.shape);
    if (r.dtype == DType::kF32) {
      if (r.f32.size() != n) throw std::invalid_argument("record '" + r.name + "' payload size mismatch");
      for (float v : r.f32) w.f32(v);
    } else {
      if (r.i8.size() != n) throw std::invalid_argument("record '" + r.name + "' payload size mismatch");
      w.u8(r.bits);
      w.u32(static_cast<std::uint32_t>(r.scales.size()));
      for (double s : r.scales) w.f64(s);
      w.bytes(r.i8.data(), r.i8.size());
    }
  }
  return w.take();
}

Container decode_container(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw std::runtime_error("LRNV container: bad magic");
  }
  Reader r(bytes.subspan(4));
  const std::uint32_t version = r.u32();
  if (version != kContainerVersion) {
    throw std::runtime_error("LRNV container: unsupported format version " + std::to_string(version) +
                             " (expected " + std::to_string(kContainerVersion) + ")");
  }
  Container c;
  const std::uint32_t meta_len = r.u32();
  const auto meta = r.bytes(meta_len);
  c.metadata.assign(meta.begin(), meta.end());
  const std::uint32_t count = r.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    TensorRecord rec;
    const auto name = r.bytes(r.u16());
    rec.name.assign(name.begin(), name.end());
    const std::uint8_t tag = r.u8();
    if (tag > static_cast<std::uint8_t>(DType::kI8)) {
      throw std::runtime_error("LRNV container: unknown dtype tag " + std::to_string(tag) +
                               " for tensor '" + rec.name + "'");
    }
    rec.dtype = static_cast<DType>(tag);
    const std::uint8_t rank = r.u8();
    for (std::uint8_t d = 0; d < rank; ++d) rec.shape.push_back(r.u32());
    const std::size_t n = numel(rec.shape);
    if (rec.dtype == DType::kF32) {
      if (n > r.remaining() / 4) throw std::runtime_error("LRNV container: truncated payload");
      rec.f32.resize(n);
      for (float& v : rec.f32) v = r.f32();
    } else {
      rec.bits = r.u8();
      rec.scales.resize(r.u32());
      for (double& s : rec.scales) s = r.f64();
      const auto payload = r.bytes(n);
      rec.i8.resize(n);
      std::memcpy(rec.i8.data(), payload.data(), n);
    }
    c.records.push_back(std::move(rec));
  }
  if (!r.at_end()) throw std::runtime_error("LRNV container: trailing bytes after last record");
  return c;
}

std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file_bytes(const std::string& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

TensorRecord f32_record(std::string name, const Tensor& t) {
  TensorRecord r;
  r.name = std::move(name);
  r.dtype = DType::kF32;
  r.shape = t.shape();
  r.f32.reserve(t.size());
  for (double v : t.data()) r.f32.push_back(static_cast<float>(v));
  return r;
}

Tensor tensor_from_f32(const TensorRecord& r) {
  if (r.dtype != DType::kF32) throw std::invalid_argument("record '" + r.name + "' is not F32");
  std::vector<double> data(r.f32.begin(), r.f32.end());
  return Tensor(r.shape, std::move(data));
}

}  // namespace lrnerv
