#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <string_view>
#include <vector>

#include "lrnerv/lrconv.hpp"

namespace lrnerv {

enum class Activation { kGelu, kRelu };

std::string activation_name(Activation a);
Activation parse_activation(std::string_view name);

struct StageSpec {
  std::size_t c_in = 0;
  std::size_t c_out = 0;
  std::size_t upscale = 1;
  double rho = 0.0;  // per-stage override; 0 means "use the plan's rho"
};

// Architecture of the decoder: embedding -> 2-layer MLP stem reshaped to
// stem_channels x stem_height x stem_width -> stages (conv, pixel shuffle,
// activation) -> head conv -> sigmoid.
struct DecoderConfig {
  std::string name = "custom";
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t frames = 1;  // sequence length, used for bpp projections

  std::size_t embed_levels = 80;
  double embed_base = 1.25;

  std::size_t stem_hidden = 0;
  std::size_t stem_channels = 0;
  std::size_t stem_height = 0;
  std::size_t stem_width = 0;

  std::vector<StageSpec> stages;
  std::size_t kernel = 3;
  std::size_t head_kernel = 3;
  Activation activation = Activation::kGelu;
  FactorizationPlan plan;

  std::size_t stage_count() const { return stages.size(); }
  std::size_t embed_dim() const { return 2 * embed_levels; }
  std::size_t stem_outputs() const { return stem_channels * stem_height * stem_width; }
  std::size_t head_channels() const;
  // Rank used by stage i when it is factorized.
  double stage_rho(std::size_t i) const;
  // Spatial extent at the input of stage i (i == stage_count() gives the output).
  std::pair<std::size_t, std::size_t> stage_input_size(std::size_t i) const;

  // Throws std::invalid_argument describing the first violated invariant.
  void validate() const;

  DecoderConfig with_plan(FactorizationPlan p) const;
};

// Training knobs that may also live in a config file.
struct TrainOptions {
  std::int64_t steps = 2000;
  std::uint64_t seed = 0;
  double lr = 5e-4;
  double lr_floor = 0.1;  // cosine decay ends at lr * lr_floor
  double loss_alpha = 0.7;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct ConfigFile {
  DecoderConfig decoder;
  TrainOptions train;
};

// Flat "key = value" text, '#' starts a comment, lists are comma separated.
ConfigFile parse_config(std::string_view text);
ConfigFile load_config(const std::string& path);
// Canonical text for the architecture keys only (stable across round trips).
std::string format_config(const DecoderConfig& config);

// Shared key = value line parser, also used by video manifests.
std::map<std::string, std::string> parse_key_values(std::string_view text, std::string_view what);

}  // namespace lrnerv
