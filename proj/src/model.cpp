#include "lrnerv/model.hpp"

#include <chrono>
#include <cmath>
#include <numbers>
#include <numeric>

#include "lrnerv/adam.hpp"
#include "lrnerv/metrics.hpp"
#include "lrnerv/ops.hpp"
#include "lrnerv/rng.hpp"

namespace lrnerv {
namespace {

constexpr double kHeadInitScale = 0.1;

void fill_uniform(Tensor& t, double bound, std::uint64_t seed, const std::string& name) {
  Rng rng(seed, name);
  for (double& v : t.data()) v = rng.uniform(-bound, bound);
}

LinearLayer init_linear(std::size_t in, std::size_t out, std::uint64_t seed, const std::string& name) {
  LinearLayer l{Tensor({out, in}), Tensor({out})};
  fill_uniform(l.weight, std::sqrt(6.0 / static_cast<double>(in)), seed, name + ".weight");
  return l;
}

DenseConv init_conv(std::size_t c_in, std::size_t c_out, std::size_t k, double gain, std::uint64_t seed,
                    const std::string& name) {
  DenseConv c{Tensor({c_out, c_in, k, k}), Tensor({c_out})};
  fill_uniform(c.weight, gain * std::sqrt(6.0 / static_cast<double>(c_in * k * k)), seed, name + ".weight");
  return c;
}

double activate(Activation a, double v) { return a == Activation::kGelu ? gelu(v) : (v > 0.0 ? v : 0.0); }

Var activate(Activation a, Var v) { return a == Activation::kGelu ? ad::gelu(v) : ad::relu(v); }

Tensor apply(Activation a, Tensor x) {
  for (double& v : x.data()) v = activate(a, v);
  return x;
}

Padding same_padding(std::size_t k) { return Padding{k / 2, k / 2}; }

}  // namespace

std::vector<NamedTensor> named_parameters(NervModel& model) {
  std::vector<NamedTensor> out = {
      {"stem.0.weight", &model.stem0.weight},
      {"stem.0.bias", &model.stem0.bias},
      {"stem.1.weight", &model.stem1.weight},
      {"stem.1.bias", &model.stem1.bias},
  };
  for (std::size_t i = 0; i < model.stages.size(); ++i) {
    const std::string p = "stages." + std::to_string(i);
    if (auto* lr = std::get_if<LRConvLayer>(&model.stages[i])) {
      out.push_back({p + ".proj.weight", &lr->proj});
      out.push_back({p + ".recon.weight", &lr->recon});
      out.push_back({p + ".bias", &lr->bias});
    } else {
      auto& d = std::get<DenseConv>(model.stages[i]);
      out.push_back({p + ".weight", &d.weight});
      out.push_back({p + ".bias", &d.bias});
    }
  }
  out.push_back({"head.weight", &model.head.weight});
  out.push_back({"head.bias", &model.head.bias});
  return out;
}

std::vector<ConstNamedTensor> named_parameters(const NervModel& model) {
  std::vector<ConstNamedTensor> out;
  for (const auto& [name, t] : named_parameters(const_cast<NervModel&>(model))) out.push_back({name, t});
  return out;
}

std::size_t parameter_count(const NervModel& model) {
  std::size_t n = 0;
  for (const auto& p : named_parameters(model)) n += p.tensor->size();
  return n;
}

NervModel model_from_tensors(const DecoderConfig& config,
                             const std::vector<std::pair<std::string, Tensor>>& tensors) {
  NervModel m = build_model(config, 0);
  auto params = named_parameters(m);
  if (tensors.size() != params.size()) {
    throw std::invalid_argument("model '" + config.name + "' has " + std::to_string(params.size()) +
                                " tensors, got " + std::to_string(tensors.size()));
  }
  std::vector<bool> seen(params.size(), false);
  for (const auto& [name, t] : tensors) {
    std::size_t i = 0;
    while (i < params.size() && params[i].name != name) ++i;
    if (i == params.size()) throw std::invalid_argument("unexpected tensor '" + name + "'");
    if (seen[i]) throw std::invalid_argument("duplicate tensor '" + name + "'");
    if (t.shape() != params[i].tensor->shape()) {
      throw std::invalid_argument("tensor '" + name + "' has shape " + shape_string(t.shape()) +
                                  ", expected " + shape_string(params[i].tensor->shape()));
    }
    t.check_finite(name.c_str());
    *params[i].tensor = t;
    seen[i] = true;
  }
  return m;
}

Tensor positional_embedding(double t, std::size_t levels, double base) {
  if (!(t >= 0.0 && t <= 1.0)) {
    throw std::invalid_argument("positional_embedding: t = " + std::to_string(t) + " outside [0, 1]");
  }
  if (levels == 0) throw std::invalid_argument("positional_embedding: need at least one level");
  Tensor e({2 * levels});
  for (std::size_t i = 0; i < levels; ++i) {
    const double arg = std::pow(base, static_cast<double>(i)) * std::numbers::pi * t;
    e[2 * i] = std::sin(arg);
    e[2 * i + 1] = std::cos(arg);
  }
  return e;
}

double normalized_time(std::size_t index, std::size_t frame_count) {
  if (frame_count == 0 || index >= frame_count) {
    throw std::out_of_range("frame index " + std::to_string(index) + " outside a " +
                            std::to_string(frame_count) + "-frame video");
  }
  if (frame_count == 1) return 0.0;
  return static_cast<double>(index) / static_cast<double>(frame_count - 1);
}

NervModel build_model(const DecoderConfig& config, std::uint64_t seed) {
  config.validate();
  NervModel m;
  m.config = config;
  m.stem0 = init_linear(config.embed_dim(), config.stem_hidden, seed, "stem.0");
  m.stem1 = init_linear(config.stem_hidden, config.stem_outputs(), seed, "stem.1");
  for (std::size_t i = 0; i < config.stages.size(); ++i) {
    const StageSpec& s = config.stages[i];
    const std::string name = "stages." + std::to_string(i);
    if (config.plan.contains(i)) {
      m.stages.emplace_back(
          init_lrconv(s.c_in, s.c_out, config.kernel, config.stage_rho(i), derive_seed(seed, name)));
    } else {
      m.stages.emplace_back(init_conv(s.c_in, s.c_out, config.kernel, 1.0, seed, name));
    }
  }
  m.head = init_conv(config.head_channels(), 3, config.head_kernel, kHeadInitScale, seed, "head");
  return m;
}

Tensor forward(const NervModel& model, double t) {
  const DecoderConfig& c = model.config;
  const Tensor e = positional_embedding(t, c.embed_levels, c.embed_base);
  Tensor h = apply(c.activation, linear(e, model.stem0.weight, &model.stem0.bias));
  h = apply(c.activation, linear(h, model.stem1.weight, &model.stem1.bias));
  Tensor x = h.reshaped({c.stem_channels, c.stem_height, c.stem_width});
  for (std::size_t i = 0; i < model.stages.size(); ++i) {
    if (const auto* lr = std::get_if<LRConvLayer>(&model.stages[i])) {
      x = lrconv_forward(*lr, x);
    } else {
      const auto& d = std::get<DenseConv>(model.stages[i]);
      x = conv2d(x, d.weight, &d.bias, same_padding(c.kernel));
    }
    x = apply(c.activation, pixel_shuffle(x, c.stages[i].upscale));
  }
  Tensor y = conv2d(x, model.head.weight, &model.head.bias, same_padding(c.head_kernel));
  for (double& v : y.data()) v = sigmoid(v);
  y.check_finite("decoded frame");
  return y;
}

Tensor render_frame(const NervModel& model, std::size_t index, std::size_t frame_count) {
  return forward(model, normalized_time(index, frame_count));
}

std::vector<Tensor> render_video(const NervModel& model, std::size_t frame_count) {
  std::vector<Tensor> out;
  out.reserve(frame_count);
  for (std::size_t i = 0; i < frame_count; ++i) out.push_back(render_frame(model, i, frame_count));
  return out;
}

Var forward(const NervModel& model, GradTape& tape, double t) {
  const DecoderConfig& c = model.config;
  std::vector<Var> p;
  for (const auto& named : named_parameters(model)) p.push_back(tape.parameter(*named.tensor));
  std::size_t k = 0;
  auto next = [&] { return p.at(k++); };

  const Var e = tape.constant(positional_embedding(t, c.embed_levels, c.embed_base));
  const Var w0 = next(), b0 = next();
  Var h = activate(c.activation, ad::linear(e, w0, b0));
  const Var w1 = next(), b1 = next();
  h = activate(c.activation, ad::linear(h, w1, b1));
  Var x = ad::reshape(h, {c.stem_channels, c.stem_height, c.stem_width});
  for (std::size_t i = 0; i < model.stages.size(); ++i) {
    if (model.stage_is_lowrank(i)) {
      const Var proj = next(), recon = next(), bias = next();
      x = lrconv_forward(x, proj, recon, bias);
    } else {
      const Var w = next(), b = next();
      x = ad::conv2d(x, w, b, same_padding(c.kernel));
    }
    x = activate(c.activation, ad::pixel_shuffle(x, c.stages[i].upscale));
  }
  const Var w = next(), b = next();
  return ad::sigmoid(ad::conv2d(x, w, b, same_padding(c.head_kernel)));
}

double reconstruction_loss(const Tensor& pred, const Tensor& gt, double alpha) {
  if (pred.shape() != gt.shape()) {
    throw std::invalid_argument("loss: shape mismatch " + shape_string(pred.shape()) + " vs " +
                                shape_string(gt.shape()));
  }
  double l1 = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) l1 += std::abs(pred[i] - gt[i]);
  l1 /= static_cast<double>(pred.size());
  return alpha * l1 + (1.0 - alpha) * (1.0 - ssim(pred, gt));
}

Var reconstruction_loss(Var pred, const Tensor& gt, double alpha) {
  if (pred.shape() != gt.shape()) {
    throw std::invalid_argument("loss: shape mismatch " + shape_string(pred.shape()) + " vs " +
                                shape_string(gt.shape()));
  }
  if (gt.rank() != 3) throw std::invalid_argument("loss: frames must be C x H x W");
  const SsimParams sp;
  if (gt.dim(1) < sp.window || gt.dim(2) < sp.window) {
    throw std::invalid_argument("loss: frame " + shape_string(gt.shape()) + " smaller than the SSIM window");
  }
  GradTape& tape = *pred.tape();
  const Var g = tape.constant(gt);
  const Var l1 = ad::mean(ad::abs(ad::sub(pred, g)));

  const Tensor window = gaussian_window(sp.window, sp.sigma);
  Tensor gg(gt.shape());
  for (std::size_t i = 0; i < gt.size(); ++i) gg[i] = gt[i] * gt[i];
  const Tensor mu_b_t = separable_filter_valid(gt, window);
  const Tensor e_bb = separable_filter_valid(gg, window);
  Tensor mu_b2(mu_b_t.shape()), var_b(mu_b_t.shape());
  for (std::size_t i = 0; i < mu_b_t.size(); ++i) {
    mu_b2[i] = mu_b_t[i] * mu_b_t[i];
    var_b[i] = e_bb[i] - mu_b2[i];
  }

  const Var mu_a = ad::separable_filter_valid(pred, window);
  const Var mu_b = tape.constant(mu_b_t);
  const Var e_aa = ad::separable_filter_valid(ad::mul(pred, pred), window);
  const Var e_ab = ad::separable_filter_valid(ad::mul(pred, g), window);
  const Var mu_a2 = ad::mul(mu_a, mu_a);
  const Var mab = ad::mul(mu_a, mu_b);
  const Var lum_num = ad::add_scalar(ad::mul_scalar(mab, 2.0), sp.c1());
  const Var lum_den = ad::add_scalar(ad::add(mu_a2, tape.constant(mu_b2)), sp.c1());
  const Var cs_num = ad::add_scalar(ad::mul_scalar(ad::sub(e_ab, mab), 2.0), sp.c2());
  const Var cs_den = ad::add_scalar(ad::add(ad::sub(e_aa, mu_a2), tape.constant(var_b)), sp.c2());
  const Var map = ad::mul(ad::div(lum_num, lum_den), ad::div(cs_num, cs_den));
  const Var s = ad::mean(map);
  return ad::add_scalar(ad::add(ad::mul_scalar(l1, alpha), ad::mul_scalar(s, -(1.0 - alpha))), 1.0 - alpha);
}

void check_frames(const DecoderConfig& config, const std::vector<Tensor>& frames) {
  if (frames.empty()) throw std::invalid_argument("video has no frames");
  const Shape want{3, config.height, config.width};
  for (std::size_t i = 0; i < frames.size(); ++i) {
    if (frames[i].shape() != want) {
      throw std::invalid_argument("frame " + std::to_string(i) + " has shape " +
                                  shape_string(frames[i].shape()) + " but config '" + config.name +
                                  "' expects " + shape_string(want));
    }
  }
}

FitResult fit(const std::vector<Tensor>& frames, const DecoderConfig& config, const TrainOptions& options,
              const StepCallback& on_step) {
  check_frames(config, frames);
  if (options.steps < 0) throw std::invalid_argument("fit: steps must be >= 0");
  const auto start = std::chrono::steady_clock::now();

  FitResult result{build_model(config, options.seed), {}};
  NervModel& model = result.model;
  TrainReport& report = result.report;
  report.seed = options.seed;
  report.steps = options.steps;

  std::vector<Tensor*> params;
  for (const auto& p : named_parameters(model)) params.push_back(p.tensor);
  AdamState adam;
  adam.config = AdamConfig{options.lr, options.beta1, options.beta2, options.eps};

  Rng order_rng(options.seed, "frame-order");
  std::vector<std::size_t> order(frames.size());
  std::size_t cursor = order.size();
  const std::size_t n = frames.size();

  for (std::int64_t step = 0; step < options.steps; ++step) {
    if (cursor == order.size()) {
      std::iota(order.begin(), order.end(), std::size_t{0});
      for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[order_rng.below(i)]);
      cursor = 0;
    }
    const std::size_t idx = order[cursor++];

    GradTape tape;
    const Var pred = forward(model, tape, normalized_time(idx, n));
    const Var loss = reconstruction_loss(pred, frames[idx], options.loss_alpha);
    const double value = loss.value()[0];
    if (!std::isfinite(value)) {
      throw DivergenceError("training diverged at step " + std::to_string(step) + " (frame " +
                            std::to_string(idx) + "): loss is " + std::to_string(value));
    }
    const std::vector<Tensor> grads = tape.backward(loss);
    for (std::size_t i = 0; i < grads.size(); ++i) {
      if (!grads[i].all_finite()) {
        throw DivergenceError("training diverged at step " + std::to_string(step) +
                              ": non-finite gradient for " + named_parameters(model)[i].name);
      }
    }
    const double lr = cosine_lr(options.lr, step, options.steps, options.lr_floor);
    adam_step(params, grads, adam, lr);
    report.loss.push_back(value);
    if (on_step) on_step(step, value, lr);
  }

  const EvalReport eval = evaluate(model, frames);
  report.frame_psnr = eval.psnr;
  report.mean_psnr = eval.mean_psnr;
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

EvalReport evaluate(const std::vector<Tensor>& recon, const std::vector<Tensor>& gt) {
  if (recon.size() != gt.size() || gt.empty()) {
    throw std::invalid_argument("evaluate: " + std::to_string(recon.size()) + " decoded frames vs " +
                                std::to_string(gt.size()) + " reference frames");
  }
  EvalReport r;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    r.psnr.push_back(psnr(recon[i], gt[i]));
    r.ms_ssim.push_back(ms_ssim(recon[i], gt[i]));
    r.mean_psnr += r.psnr.back();
    r.mean_ms_ssim += r.ms_ssim.back();
  }
  r.mean_psnr /= static_cast<double>(gt.size());
  r.mean_ms_ssim /= static_cast<double>(gt.size());
  return r;
}

EvalReport evaluate(const NervModel& model, const std::vector<Tensor>& gt) {
  check_frames(model.config, gt);
  return evaluate(render_video(model, gt.size()), gt);
}

}  // namespace lrnerv
