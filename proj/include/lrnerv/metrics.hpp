#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "lrnerv/tensor.hpp"

namespace lrnerv {

inline constexpr double kPsnrCapDb = 99.0;

double mse(const Tensor& a, const Tensor& b);
// 10 log10(1 / MSE) for frames in [0, 1], capped at 99 dB when MSE < 1e-10.
double psnr(const Tensor& a, const Tensor& b);

struct SsimParams {
  std::size_t window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double data_range = 1.0;

  double c1() const { return (k1 * data_range) * (k1 * data_range); }
  double c2() const { return (k2 * data_range) * (k2 * data_range); }
};

// Mean SSIM and mean contrast-structure term of one channel pair.
struct SsimTerms {
  double ssim = 0.0;
  double cs = 0.0;
};

// Per-channel SSIM terms with "valid" Gaussian filtering (frames C x H x W).
std::vector<SsimTerms> ssim_per_channel(const Tensor& a, const Tensor& b,
                                        const SsimParams& p = {});
// Per-channel SSIM averaged over channels.
double ssim(const Tensor& a, const Tensor& b, const SsimParams& p = {});

inline constexpr double kMsSsimWeights[5] = {0.0448, 0.2856, 0.3001, 0.2363, 0.1333};

// Number of scales actually used for a frame: the largest M <= requested with
// min(H, W) >= 2^(M-1) * window. Throws if even one scale does not fit.
std::size_t ms_ssim_scales(std::size_t height, std::size_t width, std::size_t requested,
                           const SsimParams& p = {});
// Multi-scale SSIM computed per channel, then averaged. When fewer scales
// fit, the leading weights are renormalized to sum to one.
double ms_ssim(const Tensor& a, const Tensor& b, std::size_t scales = 5, const SsimParams& p = {});

// Nonnegative, symmetric frame-pair distance with d(x, x) == 0.
struct FramePairDistance {
  std::string name;
  std::function<double(const Tensor&, const Tensor&)> fn;

  double operator()(const Tensor& a, const Tensor& b) const { return fn(a, b); }
};

// (1 - SSIM) / 2
FramePairDistance ssim_distance();

// LPIPS-style distance backed by externally supplied conv weights; see
// README for the container layout. Throws if the file is missing or malformed.
FramePairDistance lpips_file_distance(const std::string& path);

// "ssim" or "lpips-file:<path>".
FramePairDistance make_distance(const std::string& spec);

inline constexpr double kFlickerEps = 1e-8;

struct FlickerReport {
  std::string distance;
  std::vector<double> d_recon;      // d(recon_t, recon_{t-1}), t = 1..n-1
  std::vector<double> d_gt;         // d(gt_t, gt_{t-1})
  std::vector<double> ratio;        // d_recon / max(d_gt, eps)
  std::vector<bool> static_pair;    // d_gt <= eps
  double mean_ratio = 0.0;          // over non-static pairs (all pairs if every pair is static)
  std::size_t static_pairs = 0;
};

FlickerReport flicker_ratio(const std::vector<Tensor>& recon, const std::vector<Tensor>& gt,
                            const FramePairDistance& d, double eps = kFlickerEps);

std::string flicker_csv(const FlickerReport& report);

}  // namespace lrnerv
