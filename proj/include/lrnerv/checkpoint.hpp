#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lrnerv/container.hpp"
#include "lrnerv/model.hpp"
#include "lrnerv/quantizer.hpp"

// Checkpoints are LRNV containers whose metadata is the decoder config text
// and whose records are the model parameters. Float models use F32 records;
// quantized models use I8 records with their scales.
namespace lrnerv {

struct LoadedCheckpoint {
  NervModel model;  // dequantized when the file holds INT8 weights
  std::optional<QuantizedCheckpoint> quantized;
};

std::vector<std::uint8_t> encode_checkpoint(const NervModel& model);
std::vector<std::uint8_t> encode_checkpoint(const QuantizedCheckpoint& q);
LoadedCheckpoint decode_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const NervModel& model, const std::string& path);
void save_checkpoint(const QuantizedCheckpoint& q, const std::string& path);
LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace lrnerv
