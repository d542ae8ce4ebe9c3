#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "lrnerv/config.hpp"
#include "lrnerv/lrconv.hpp"
#include "lrnerv/metrics.hpp"
#include "lrnerv/quantizer.hpp"
#include "lrnerv/svg.hpp"

namespace lrnerv {

struct RdPoint {
  std::string plan;
  std::string precision;  // "float32" or "int<bits>"
  int bits = kFloatBits;
  std::size_t params = 0;
  double gflops = 0.0;
  double bpp = 0.0;
  double psnr = 0.0;
  double ms_ssim = 0.0;
  double param_reduction_pct = 0.0;
  double flicker_ratio = 0.0;
  std::string status = "ok";  // "failed: <reason>" leaves the metric columns empty
};

struct SweepOptions {
  std::vector<FactorizationPlan> plans;
  TrainOptions train;
  int bits = kDefaultBits;
  std::string distance = "ssim";
  std::size_t jobs = 1;           // > 1 trains plans concurrently; row order is unchanged
  std::string checkpoint_dir;     // when set, <dir>/plan_<label>.lrnv per plan
  std::function<void(const std::string&)> log;
};

// "-;4;3-4;2-4;1-4;0-4" (';' separated, '-' or U+2212 for the dense baseline).
std::vector<FactorizationPlan> parse_plan_list(const std::string& text, double rho = kDefaultRho);

// Trains one model per plan with identical seed and steps, then evaluates the
// float model and its quantized copy. A diverging plan yields failed rows and
// the sweep continues.
std::vector<RdPoint> rd_sweep(const std::vector<Tensor>& frames, const DecoderConfig& config,
                              const SweepOptions& options);

// Columns: plan, precision, bits, params, gflops, bpp, psnr, ms_ssim,
// param_reduction_pct, flicker_ratio, status
std::string format_rd_csv(const std::vector<RdPoint>& points);
std::vector<RdPoint> parse_rd_csv(const std::string& text);

// PSNR versus bpp per precision, and parameters versus GFLOPs.
std::vector<PlotPanel> rd_panels(const std::vector<RdPoint>& points);

}  // namespace lrnerv
