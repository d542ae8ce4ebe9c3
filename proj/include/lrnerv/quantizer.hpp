#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "lrnerv/config.hpp"
#include "lrnerv/model.hpp"
#include "lrnerv/tensor.hpp"

namespace lrnerv {

enum class Granularity { kPerTensor, kPerChannel };

inline constexpr int kDefaultBits = 8;
inline constexpr int kFloatBits = 32;

struct QuantizedTensor {
  Shape shape;
  std::vector<std::int8_t> values;
  std::vector<double> scales;  // one per tensor, or one per output channel (dim 0)
  int bits = kDefaultBits;

  std::int32_t qmax() const { return (1 << (bits - 1)) - 1; }
  double scale_of(std::size_t flat_index) const;
};

// Symmetric min-max: scale = max|w| / (2^(bits-1) - 1), q = round half away
// from zero, clamped to [-qmax, qmax]. An all-zero tensor (or channel) gets
// scale 1. bits in [2, 8]. Per-channel applies to tensors of rank >= 2.
QuantizedTensor quantize_tensor(const Tensor& w, int bits = kDefaultBits,
                                Granularity granularity = Granularity::kPerTensor);
Tensor dequantize_tensor(const QuantizedTensor& q);

struct QuantizedCheckpoint {
  DecoderConfig config;
  int bits = kDefaultBits;
  std::vector<std::pair<std::string, QuantizedTensor>> tensors;  // named_parameters() order

  std::size_t parameter_count() const;
};

QuantizedCheckpoint quantize_model(const NervModel& model, int bits = kDefaultBits,
                                   Granularity granularity = Granularity::kPerTensor);
NervModel dequantize_model(const QuantizedCheckpoint& q);

struct QuantizedEval {
  EvalReport eval;
  int bits = kDefaultBits;
  std::size_t params = 0;
  double bpp = 0.0;  // params * bits / (frames * H * W)
};

QuantizedEval quantized_eval(const QuantizedCheckpoint& q, const std::vector<Tensor>& frames);
// bits == 32 evaluates the float model untouched.
QuantizedEval quantized_eval(const NervModel& model, int bits, const std::vector<Tensor>& frames,
                             Granularity granularity = Granularity::kPerTensor);

}  // namespace lrnerv
