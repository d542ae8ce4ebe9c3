// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "lrnerv/checkpoint.hpp"
#include "lrnerv/complexity.hpp"
#include "lrnerv/container.hpp"
#include "lrnerv/lrconv.hpp"
#include "lrnerv/model.hpp"
#include "lrnerv/ops.hpp"
#include "lrnerv/quantizer.hpp"
#include "lrnerv/rd_sweep.hpp"
#include "lrnerv/video.hpp"
#include "oracles.hpp"

using namespace lrnerv;
namespace fs = std::filesystem;

namespace {

constexpr double kRatioTol = 0.05;
constexpr double kCompositionTol = 1e-9;
constexpr double kGradTol = 1e-4;
constexpr std::size_t kGradInstances = 20;
constexpr double kGflopsRatioTarget = 64.92 / 201.9;
constexpr double kGflopsRatioRelTol = 0.05;
constexpr double kSaturationPct = 1.0;
constexpr double kParamReductionTarget = 9.28;
constexpr double kParamReductionBand = 1.0;
constexpr double kDensePsnrFloor = 34.5;
constexpr double kOrderingSlackDb = 0.3;
constexpr double kDenseGapDb = 1.5;
constexpr double kToyBudgetSeconds = 900.0;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [" << what << "]";
    }
  }
};

int failures = 0;
std::vector<int> selected;  // empty: all criteria

void report(int id, const std::string& title, const std::function<void(Outcome&)>& body) {
  if (!selected.empty() && std::find(selected.begin(), selected.end(), id) == selected.end()) return;
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    body(o);
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail << " [exception: " << e.what() << "]";
  }
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::printf("%s criterion %d: %s (%.1fs)%s\n", o.pass ? "PASS" : "FAIL", id, title.c_str(), s,
              o.detail.str().c_str());
  std::fflush(stdout);
  failures += o.pass ? 0 : 1;
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

DecoderConfig canonical() { return load_config(LRNERV_CONFIG_DIR "/canonical.cfg").decoder; }

// Analytic gradient of f with respect to each registered parameter, compared
// against central differences of g on the same inputs.
double grad_error(std::vector<Tensor>& inputs,
                  const std::function<Var(GradTape&, const std::vector<Var>&)>& f,
                  const std::function<double()>& g) {
  GradTape tape;
  std::vector<Var> vars;
  for (const Tensor& t : inputs) vars.push_back(tape.parameter(t));
  const auto grads = tape.backward(f(tape, vars));
  double worst = 0.0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    worst = std::max(worst, oracle::relative_error(grads[i], oracle::numeric_gradient(g, inputs[i])));
  }
  return worst;
}

std::string read_text(const std::string& path) {
  const auto b = read_file_bytes(path);
  return std::string(b.begin(), b.end());
}

}  // namespace

// Usage: acceptance [criterion ...]
int main(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) selected.push_back(std::atoi(argv[i]));
  report(1, "worked-example parameter counts", [](Outcome& o) {
    const auto dense = dense_param_count(96, 384, 3), lr = lr_param_count(96, 384, 3, 24);
    const double ratio = 1.0 / param_ratio(96, 384, 3, 24);
    o.detail << " dense=" << dense << " lr=" << lr << " reduction=" << ratio << "x";
    o.require(dense == 331776, "dense != 331776");
    o.require(lr == 34560, "lr != 34560");
    o.require(std::abs(ratio - 9.6) <= kRatioTol, "ratio");
  });

  report(2, "rank selection rule", [](Outcome& o) {
    o.require(select_rank(96, 384, 0.25) == 24, "select_rank(96,384,0.25) != 24");
    Rng rng(2024);
    std::size_t bad = 0;
    for (int i = 0; i < 10000; ++i) {
      const std::size_t ci = 1 + rng.below(1024), co = 1 + rng.below(1024);
      const double rho = 1.0 - rng.uniform();  // (0, 1]
      const std::size_t r = select_rank(ci, co, rho);
      const std::size_t want = static_cast<std::size_t>(std::ceil(rho * static_cast<double>(std::min(ci, co))));
      if (r < 1 || r > std::min(ci, co) || r != std::max<std::size_t>(1, std::min(want, std::min(ci, co)))) ++bad;
    }
    o.detail << " sweep violations=" << bad << "/10000";
    o.require(bad == 0, "property sweep");
  });

  report(3, "composition oracle", [](Outcome& o) {
    Rng rng(3);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
      const std::size_t ci = 1 + rng.below(8), co = 1 + rng.below(8);
      LRConvLayer l = init_lrconv(ci, co, 3, 0.05 + 0.95 * rng.uniform(), rng.next());
      l.bias = oracle::random_tensor({co}, rng);
      const Tensor x = oracle::random_tensor({ci, 16, 16}, rng);
      const Tensor w = compose_effective_kernel(l);
      worst = std::max(worst, max_abs_diff(lrconv_forward(l, x), conv2d(x, w, &l.bias, Padding{1, 1})));
      worst = std::max(worst, max_abs_diff(lrconv_forward(l, x), oracle::direct_conv2d(x, w, &l.bias, 1, 1)));
    }
    o.detail << " max_abs_err=" << worst;
    o.require(worst <= kCompositionTol, "error above 1e-9");
  });

  report(4, "gradient suite", [](Outcome& o) {
    Rng rng(4);
    double conv = 0.0, lr = 0.0, loss = 0.0;
    for (std::size_t i = 0; i < kGradInstances; ++i) {
      const std::size_t ci = 1 + rng.below(3), co = 1 + rng.below(3), k = i % 2 ? 3 : 1;
      std::vector<Tensor> in = {oracle::random_tensor({ci, 5, 6}, rng), oracle::random_tensor({co, ci, k, k}, rng),
                                oracle::random_tensor({co}, rng)};
      const Padding pad{k / 2, k / 2};
      conv = std::max(conv, grad_error(
                                in,
                                [&](GradTape&, const std::vector<Var>& v) {
                                  return ad::sum(ad::gelu(ad::conv2d(v[0], v[1], v[2], pad)));
                                },
                                [&] {
                                  const Tensor y = conv2d(in[0], in[1], &in[2], pad);
                                  double s = 0.0;
                                  for (double t : y.data()) s += gelu(t);
                                  return s;
                                }));
    }
    for (std::size_t i = 0; i < kGradInstances; ++i) {
      const std::size_t ci = 1 + rng.below(4), co = 1 + rng.below(4);
      LRConvLayer l = init_lrconv(ci, co, 3, 0.5, rng.next());
      std::vector<Tensor> in = {oracle::random_tensor({ci, 5, 6}, rng), l.proj, l.recon,
                                oracle::random_tensor({co}, rng)};
      const Tensor target = oracle::random_tensor({co, 5, 6}, rng);
      lr = std::max(lr, grad_error(
                            in,
                            [&](GradTape& tape, const std::vector<Var>& v) {
                              const Var y = lrconv_forward(v[0], v[1], v[2], v[3]);
                              const Var d = ad::sub(y, tape.constant(target));
                              return ad::sum(ad::mul(d, d));
                            },
                            [&] {
                              const Tensor y = lrconv_forward(LRConvLayer{in[1], in[2], in[3]}, in[0]);
                              double s = 0.0;
                              for (std::size_t j = 0; j < y.size(); ++j) s += (y[j] - target[j]) * (y[j] - target[j]);
                              return s;
                            }));
    }
    for (std::size_t i = 0; i < kGradInstances; ++i) {
      const Tensor gt = oracle::random_tensor({3, 12, 14}, rng, 0.0, 1.0);
      // Keep predictions away from gt so |pred - gt| is differentiable at every element.
      Tensor pred = gt;
      for (double& v : pred.data()) v += (rng.uniform() < 0.5 ? -1.0 : 1.0) * rng.uniform(0.05, 0.3);
      std::vector<Tensor> in = {pred};
      const double alpha = rng.uniform(0.0, 1.0);
      loss = std::max(loss, grad_error(
                                in,
                                [&](GradTape&, const std::vector<Var>& v) {
                                  return reconstruction_loss(v[0], gt, alpha);
                                },
                                [&] { return reconstruction_loss(in[0], gt, alpha); }));
    }
    o.detail << fmt(" rel_err conv2d=%.2e lrconv=%.2e loss=%.2e", conv, lr, loss);
    o.require(conv <= kGradTol && lr <= kGradTol && loss <= kGradTol, "relative error above 1e-4");
  });

  report(5, "canonical complexity ratios", [](Outcome& o) {
    const DecoderConfig c = canonical();
    std::vector<double> g;
    for (const char* p : {"-", "4", "3-4", "2-4", "1-4", "0-4"}) {
      g.push_back(model_report(c, FactorizationPlan::parse(p)).gflops());
    }
    const double ratio = g[1] / g[0];
    o.detail << fmt(" dense=%.4f {4}=%.4f ratio=%.4f", g[0], g[1], ratio)
             << fmt(" last_gap=%.3f%%", 100.0 * (g[4] - g[5]) / g[0]);
    o.require(std::abs(ratio / kGflopsRatioTarget - 1.0) <= kGflopsRatioRelTol, "ratio");
    for (std::size_t i = 1; i < g.size(); ++i) o.require(g[i] < g[i - 1], "not strictly decreasing");
    o.require(100.0 * (g[4] - g[5]) / g[0] < kSaturationPct, "no saturation");
  });

  report(6, "whole-model reductions", [](Outcome& o) {
    const DecoderConfig c = canonical();
    const double pr = param_reduction(c, FactorizationPlan::parse("4"));
    const ComplexityReport r = model_report(c, FactorizationPlan::parse("4"));
    const double b0 = model_bpp(r.baseline_params, kDefaultBits, c), b1 = model_bpp(r.params, kDefaultBits, c);
    const double br = 100.0 * (b0 - b1) / b0;
    o.detail << fmt(" params=%.3f%% bpp=%.3f%%", pr, br);
    o.require(std::abs(pr - kParamReductionTarget) <= kParamReductionBand, "param reduction");
    o.require(std::abs(br - kParamReductionTarget) <= kParamReductionBand, "bpp reduction");
    o.require(std::abs(br - pr) <= 1e-9, "bpp != params");
  });

  report(7, "MAC counter audit", [](Outcome& o) {
    Rng rng(7);
    std::size_t shapes = 0, bad = 0;
    for (int i = 0; i < 16; ++i) {
      const std::size_t ci = 1 + rng.below(6), co = 1 + rng.below(6);
      const std::size_t kh = 1 + 2 * rng.below(3), kw = 1 + 2 * rng.below(3);
      const std::size_t h = 1 + rng.below(10), w = 1 + rng.below(10);
      const Tensor x = oracle::random_tensor({ci, h, w}, rng);
      const Tensor k = oracle::random_tensor({co, ci, kh, kw}, rng);
      std::uint64_t counted = 0;
      const Tensor y = oracle::direct_conv2d(x, k, nullptr, kh / 2, kw / 2, &counted);
      bad += counted != conv_macs(ci, co, kh, kw, y.dim(1), y.dim(2));
      ++shapes;
    }
    o.detail << " shapes=" << shapes << " mismatches=" << bad;
    o.require(bad == 0, "mismatch");
  });

  report(8, "quantization bounds", [](Outcome& o) {
    Rng rng(8);
    std::size_t violations = 0;
    for (int i = 0; i < 10000; ++i) {
      const Tensor w = oracle::random_tensor({1 + rng.below(8), 1 + rng.below(8)}, rng, -4.0, 4.0);
      const QuantizedTensor q = quantize_tensor(w);
      const Tensor back = dequantize_tensor(q);
      for (std::size_t j = 0; j < w.size(); ++j) violations += std::abs(back[j] - w[j]) > q.scale_of(j) / 2;
    }
    const QuantizedTensor z = quantize_tensor(Tensor({4, 4}));
    o.require(z.scales[0] == 1.0 && dequantize_tensor(z) == Tensor({4, 4}), "zero tensor");
    const NervModel m = build_model(oracle::tiny_config().with_plan(FactorizationPlan::parse("2-4")), 8);
    const auto bytes = encode_checkpoint(quantize_model(m));
    const LoadedCheckpoint l = decode_checkpoint(bytes);
    o.require(l.quantized.has_value() && encode_checkpoint(*l.quantized) == bytes, "INT8 checkpoint round trip");
    o.detail << " violations=" << violations << " checkpoint_bytes=" << bytes.size();
    o.require(violations == 0, "error above scale/2");
  });

  report(9, "toy RD study", [](Outcome& o) {
    const ConfigFile cf = load_config(LRNERV_CONFIG_DIR "/toy.cfg");
    const auto frames = synthetic_video(cf.decoder.frames, cf.decoder.height, cf.decoder.width);
    SweepOptions opt;
    opt.plans = parse_plan_list("-;4;0-4", kDefaultRho);
    opt.train = cf.train;
    opt.bits = 8;
    const auto t0 = std::chrono::steady_clock::now();
    const auto rows = rd_sweep(frames, cf.decoder, opt);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    auto get = [&](const std::string& plan, const std::string& prec) {
      for (const RdPoint& r : rows)
        if (r.plan == plan && r.precision == prec) return r;
      throw std::runtime_error("missing row " + plan + " " + prec);
    };
    const RdPoint d = get("-", "float32"), l4 = get("4", "float32"), all = get("0-4", "float32");
    const RdPoint d8 = get("-", "int8"), l48 = get("4", "int8"), all8 = get("0-4", "int8");
    for (const RdPoint& r : rows) o.require(r.status == "ok", "plan " + r.plan + " " + r.status);
    const double drop4 = l4.psnr - l48.psnr, drop_all = all.psnr - all8.psnr;
    o.detail << fmt(" psnr dense=%.3f {4}=%.3f {0-4}=%.3f", d.psnr, l4.psnr, all.psnr)
             << fmt(" int8_drop {4}=%.4f {0-4}=%.4f", drop4, drop_all)
             << fmt(" flicker {4}=%.4f {0-4}=%.4f", l4.flicker_ratio, all.flicker_ratio, 0.0)
             << fmt(" dense_int8=%.3f time=%.0fs", d8.psnr, secs);
    o.require(d.psnr >= kDensePsnrFloor, "(a) dense below floor");
    o.require(d.psnr + kOrderingSlackDb >= l4.psnr && l4.psnr + kOrderingSlackDb >= all.psnr, "(b) ordering");
    o.require(d.psnr - l4.psnr <= kDenseGapDb, "(c) dense gap");
    o.require(drop4 <= drop_all, "(d) INT8 drop ordering");
    o.require(l4.flicker_ratio <= all.flicker_ratio, "(e) flicker ordering");
    o.require(secs <= kToyBudgetSeconds, "runtime budget");
  });

  report(10, "determinism", [](Outcome& o) {
    const fs::path dir = fs::temp_directory_path() / "lrnerv_acceptance_determinism";
    fs::remove_all(dir);
    fs::create_directories(dir);
    std::vector<std::string> csv;
    for (int run = 0; run < 2; ++run) {
      const std::string out = (dir / ("rd" + std::to_string(run) + ".csv")).string();
      const std::string cmd = std::string("\"") + LRNERV_CLI + "\" rd-sweep --config \"" LRNERV_CONFIG_DIR
                              "/toy.cfg\" --frames synthetic --steps 30 --seed 3 --plans \"-;4;0-4\" --jobs 1"
                              " --ckpt-dir \"" + (dir / ("ck" + std::to_string(run))).string() +
                              "\" --csv \"" + out + "\" > /dev/null 2>&1";
      o.require(std::system(cmd.c_str()) == 0, "rd-sweep run " + std::to_string(run) + " failed");
      csv.push_back(read_text(out));
    }
    o.require(!csv[0].empty() && csv[0] == csv[1], "CSV differs between runs");
    std::size_t checked = 0;
    for (const auto& entry : fs::directory_iterator(dir / "ck0")) {
      const std::string a = entry.path().string();
      const std::string b = (dir / "ck1" / entry.path().filename()).string();
      o.require(read_file_bytes(a) == read_file_bytes(b), "checkpoint differs across runs");
      const LoadedCheckpoint l = load_checkpoint(a);
      const std::string again = (dir / "again.lrnv").string();
      if (l.quantized) {
        save_checkpoint(*l.quantized, again);
      } else {
        save_checkpoint(l.model, again);
      }
      o.require(read_file_bytes(again) == read_file_bytes(a), "save/load/save differs");
      ++checked;
    }
    o.detail << " csv_bytes=" << csv[0].size() << " checkpoints=" << checked;
    o.require(checked == 6, "expected float and INT8 checkpoints for 3 plans");
    fs::remove_all(dir);
  });

  std::printf("%s: %d criteria failed\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
