#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "lrnerv/config.hpp"
#include "lrnerv/lrconv.hpp"

// Per-frame parameter and multiply-accumulate accounting. Only convolutions
// and linear layers are counted; activations, pixel shuffle and the sigmoid
// are free.
namespace lrnerv {

struct LayerCost {
  std::string name;
  std::uint64_t params = 0;
  std::uint64_t macs = 0;

  double gflops() const { return 2.0 * static_cast<double>(macs) / 1e9; }
};

struct ComplexityReport {
  std::string plan;
  std::vector<LayerCost> layers;
  std::uint64_t params = 0;
  std::uint64_t macs = 0;
  std::uint64_t baseline_params = 0;  // same config, all-dense plan
  std::uint64_t baseline_macs = 0;

  double gflops() const { return 2.0 * static_cast<double>(macs) / 1e9; }
  double baseline_gflops() const { return 2.0 * static_cast<double>(baseline_macs) / 1e9; }
  double param_reduction_pct() const;
  double gflops_reduction_pct() const;
};

// c_out * h_out * w_out * c_in * kh * kw
std::uint64_t conv_macs(std::size_t c_in, std::size_t c_out, std::size_t kh, std::size_t kw,
                        std::size_t h_out, std::size_t w_out);

// Walks stem, stages and head at their true spatial resolution. Layer names
// follow the parameter names of a built model (stem.0, stages.4.proj, ...).
ComplexityReport model_report(const DecoderConfig& config, const FactorizationPlan& plan);
ComplexityReport model_report(const DecoderConfig& config);

// 100 * (dense - plan) / dense over whole-model parameters.
double param_reduction(const DecoderConfig& config, const FactorizationPlan& plan);

// total_bits / (frames * height * width)
double bpp(std::uint64_t total_param_bits, std::size_t frames, std::size_t height, std::size_t width);
double model_bpp(std::uint64_t params, int bits_per_weight, const DecoderConfig& config);

// Aligned text table with a totals footer.
std::string format_report_table(const ComplexityReport& report);
// Columns: layer, params, macs, gflops, cumulative (running GFLOPs).
std::string format_report_csv(const ComplexityReport& report);

}  // namespace lrnerv
