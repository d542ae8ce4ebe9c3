#include "lrnerv/quantizer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "lrnerv/complexity.hpp"

namespace lrnerv {
namespace {

void check_bits(int bits) {
  if (bits < 2 || bits > 8) {
    throw std::invalid_argument("quantization supports 2..8 bits (32 = float passthrough), got " +
                                std::to_string(bits));
  }
}

double scale_for(double max_abs, std::int32_t qmax) {
  return max_abs > 0.0 ? max_abs / static_cast<double>(qmax) : 1.0;
}

}  // namespace

double QuantizedTensor::scale_of(std::size_t flat_index) const {
  if (scales.size() == 1) return scales[0];
  const std::size_t per = values.size() / scales.size();
  return scales[flat_index / per];
}

QuantizedTensor quantize_tensor(const Tensor& w, int bits, Granularity granularity) {
  check_bits(bits);
  w.check_finite("quantize_tensor input");
  QuantizedTensor q;
  q.shape = w.shape();
  q.bits = bits;
  q.values.resize(w.size());
  const std::int32_t qmax = q.qmax();
  const std::size_t groups =
      granularity == Granularity::kPerChannel && w.rank() >= 2 && w.size() > 0 ? w.dim(0) : 1;
  const std::size_t per = groups ? w.size() / groups : 0;
  for (std::size_t g = 0; g < groups; ++g) {
    double max_abs = 0.0;
    for (std::size_t i = g * per; i < (g + 1) * per; ++i) max_abs = std::max(max_abs, std::abs(w[i]));
    const double scale = scale_for(max_abs, qmax);
    q.scales.push_back(scale);
    for (std::size_t i = g * per; i < (g + 1) * per; ++i) {
      const double r = std::round(w[i] / scale);
      q.values[i] = static_cast<std::int8_t>(std::clamp(r, -static_cast<double>(qmax), static_cast<double>(qmax)));
    }
  }
  return q;
}

Tensor dequantize_tensor(const QuantizedTensor& q) {
  if (q.values.size() != numel(q.shape) || q.scales.empty() || q.values.size() % q.scales.size() != 0) {
    throw std::invalid_argument("dequantize_tensor: malformed quantized tensor " + shape_string(q.shape));
  }
  Tensor t(q.shape);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<double>(q.values[i]) * q.scale_of(i);
  return t;
}

std::size_t QuantizedCheckpoint::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [name, t] : tensors) n += t.values.size();
  return n;
}

QuantizedCheckpoint quantize_model(const NervModel& model, int bits, Granularity granularity) {
  QuantizedCheckpoint q;
  q.config = model.config;
  q.bits = bits;
  for (const auto& p : named_parameters(model)) {
    q.tensors.emplace_back(p.name, quantize_tensor(*p.tensor, bits, granularity));
  }
  return q;
}

NervModel dequantize_model(const QuantizedCheckpoint& q) {
  std::vector<std::pair<std::string, Tensor>> tensors;
  for (const auto& [name, t] : q.tensors) tensors.emplace_back(name, dequantize_tensor(t));
  return model_from_tensors(q.config, tensors);
}

QuantizedEval quantized_eval(const QuantizedCheckpoint& q, const std::vector<Tensor>& frames) {
  check_frames(q.config, frames);
  QuantizedEval r;
  r.eval = evaluate(dequantize_model(q), frames);
  r.bits = q.bits;
  r.params = q.parameter_count();
  r.bpp = bpp(std::uint64_t{r.params} * static_cast<std::uint64_t>(q.bits), frames.size(), q.config.height,
              q.config.width);
  return r;
}

QuantizedEval quantized_eval(const NervModel& model, int bits, const std::vector<Tensor>& frames,
                             Granularity granularity) {
  if (bits != kFloatBits) return quantized_eval(quantize_model(model, bits, granularity), frames);
  check_frames(model.config, frames);
  QuantizedEval r;
  r.eval = evaluate(model, frames);
  r.bits = kFloatBits;
  r.params = parameter_count(model);
  r.bpp = bpp(std::uint64_t{r.params} * kFloatBits, frames.size(), model.config.height, model.config.width);
  return r;
}

}  // namespace lrnerv
