#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "lrnerv/autodiff.hpp"
#include "lrnerv/config.hpp"
#include "lrnerv/lrconv.hpp"
#include "lrnerv/tensor.hpp"

namespace lrnerv {

struct DenseConv {
  Tensor weight;  // c_out x c_in x k x k
  Tensor bias;    // c_out
};

struct LinearLayer {
  Tensor weight;  // out x in
  Tensor bias;    // out
};

using StageLayer = std::variant<DenseConv, LRConvLayer>;

struct NervModel {
  DecoderConfig config;
  LinearLayer stem0;
  LinearLayer stem1;
  std::vector<StageLayer> stages;
  DenseConv head;

  bool stage_is_lowrank(std::size_t i) const {
    return std::holds_alternative<LRConvLayer>(stages.at(i));
  }
};

struct NamedTensor {
  std::string name;
  Tensor* tensor;
};

struct ConstNamedTensor {
  std::string name;
  const Tensor* tensor;
};

// Every trainable tensor in a fixed order:
//   stem.0.weight, stem.0.bias, stem.1.weight, stem.1.bias,
//   stages.{i}.weight | stages.{i}.proj.weight, stages.{i}.recon.weight,
//   stages.{i}.bias, head.weight, head.bias
std::vector<NamedTensor> named_parameters(NervModel& model);
std::vector<ConstNamedTensor> named_parameters(const NervModel& model);
std::size_t parameter_count(const NervModel& model);

// Model with the structure of `config` and the given tensors. Every
// parameter must be supplied exactly once with its expected shape.
NervModel model_from_tensors(const DecoderConfig& config,
                             const std::vector<std::pair<std::string, Tensor>>& tensors);

// [sin(b^0 pi t), cos(b^0 pi t), ..., sin(b^(L-1) pi t), cos(b^(L-1) pi t)]
Tensor positional_embedding(double t, std::size_t levels, double base);

// i / (n - 1), or 0 for a single frame.
double normalized_time(std::size_t index, std::size_t frame_count);

// Validates the config. Each tensor draws from its own seed stream keyed by
// its name, so changing one stage's form leaves all other tensors unchanged.
NervModel build_model(const DecoderConfig& config, std::uint64_t seed);

// Decoded frame, 3 x H x W in [0, 1]. Throws std::domain_error on non-finite
// parameters or outputs.
Tensor forward(const NervModel& model, double t);
Tensor render_frame(const NervModel& model, std::size_t index, std::size_t frame_count);
std::vector<Tensor> render_video(const NervModel& model, std::size_t frame_count);

// Records the forward pass with every parameter registered on `tape` in
// named_parameters() order.
Var forward(const NervModel& model, GradTape& tape, double t);

inline constexpr double kDefaultLossAlpha = 0.7;

// alpha * L1 + (1 - alpha) * (1 - SSIM)
double reconstruction_loss(const Tensor& pred, const Tensor& gt, double alpha = kDefaultLossAlpha);
Var reconstruction_loss(Var pred, const Tensor& gt, double alpha = kDefaultLossAlpha);

struct TrainReport {
  std::vector<double> loss;        // one entry per step
  std::vector<double> frame_psnr;  // final per-frame PSNR
  double mean_psnr = 0.0;
  double seconds = 0.0;
  std::uint64_t seed = 0;
  std::int64_t steps = 0;
};

struct FitResult {
  NervModel model;
  TrainReport report;
};

class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using StepCallback = std::function<void(std::int64_t step, double loss, double lr)>;

// Adam with cosine decay, one frame per step, frames visited in a freshly
// shuffled order each epoch. Bitwise reproducible for a fixed seed.
FitResult fit(const std::vector<Tensor>& frames, const DecoderConfig& config,
              const TrainOptions& options, const StepCallback& on_step = {});

struct EvalReport {
  std::vector<double> psnr;
  std::vector<double> ms_ssim;
  double mean_psnr = 0.0;
  double mean_ms_ssim = 0.0;
};

EvalReport evaluate(const std::vector<Tensor>& recon, const std::vector<Tensor>& gt);
EvalReport evaluate(const NervModel& model, const std::vector<Tensor>& gt);

// Throws std::invalid_argument unless every frame is 3 x height x width.
void check_frames(const DecoderConfig& config, const std::vector<Tensor>& frames);

}  // namespace lrnerv
