#include "lrnerv/checkpoint.hpp"

#include <cmath>
#include <stdexcept>

#include "lrnerv/config.hpp"

namespace lrnerv {

std::vector<std::uint8_t> encode_checkpoint(const NervModel& model) {
  Container c;
  c.metadata = format_config(model.config);
  for (const auto& p : named_parameters(model)) c.records.push_back(f32_record(p.name, *p.tensor));
  return encode_container(c);
}

std::vector<std::uint8_t> encode_checkpoint(const QuantizedCheckpoint& q) {
  Container c;
  c.metadata = format_config(q.config);
  for (const auto& [name, t] : q.tensors) {
    TensorRecord r;
    r.name = name;
    r.dtype = DType::kI8;
    r.shape = t.shape;
    r.i8 = t.values;
    r.bits = static_cast<std::uint8_t>(t.bits);
    r.scales = t.scales;
    c.records.push_back(std::move(r));
  }
  return encode_container(c);
}

LoadedCheckpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
  const Container c = decode_container(bytes);
  const DecoderConfig config = parse_config(c.metadata).decoder;
  if (c.records.empty()) throw std::runtime_error("checkpoint holds no tensors");
  const bool quantized = c.records.front().dtype == DType::kI8;
  LoadedCheckpoint out;
  if (!quantized) {
    std::vector<std::pair<std::string, Tensor>> tensors;
    for (const auto& r : c.records) {
      if (r.dtype != DType::kF32) throw std::runtime_error("checkpoint mixes F32 and I8 tensors");
      tensors.emplace_back(r.name, tensor_from_f32(r));
    }
    out.model = model_from_tensors(config, tensors);
    return out;
  }
  QuantizedCheckpoint q;
  q.config = config;
  q.bits = c.records.front().bits;
  for (const auto& r : c.records) {
    if (r.dtype != DType::kI8) throw std::runtime_error("checkpoint mixes F32 and I8 tensors");
    if (r.bits != q.bits) throw std::runtime_error("tensor '" + r.name + "' uses a different bit width");
    if (r.bits < 2 || r.bits > 8) {
      throw std::runtime_error("tensor '" + r.name + "' has unsupported bit width " + std::to_string(r.bits));
    }
    const std::size_t n = r.i8.size();
    if (r.scales.empty() || (r.scales.size() != 1 && (r.shape.empty() || r.scales.size() != r.shape[0])) ||
        n % r.scales.size() != 0) {
      throw std::runtime_error("tensor '" + r.name + "' has " + std::to_string(r.scales.size()) + " scales");
    }
    QuantizedTensor t;
    t.shape = r.shape;
    t.values = r.i8;
    t.scales = r.scales;
    t.bits = r.bits;
    for (double s : t.scales) {
      if (!(s > 0.0) || !std::isfinite(s)) throw std::runtime_error("tensor '" + r.name + "' has a bad scale");
    }
    for (std::int8_t v : t.values) {
      if (v < -t.qmax() || v > t.qmax()) {
        throw std::runtime_error("tensor '" + r.name + "' holds values outside the symmetric range");
      }
    }
    q.tensors.emplace_back(r.name, std::move(t));
  }
  out.model = dequantize_model(q);
  out.quantized = std::move(q);
  return out;
}

void save_checkpoint(const NervModel& model, const std::string& path) {
  write_file_bytes(path, encode_checkpoint(model));
}

void save_checkpoint(const QuantizedCheckpoint& q, const std::string& path) {
  write_file_bytes(path, encode_checkpoint(q));
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  const auto bytes = read_file_bytes(path);
  try {
    return decode_checkpoint(bytes);
  } catch (const std::exception& e) {
    throw std::runtime_error("'" + path + "': " + e.what());
  }
}

}  // namespace lrnerv
