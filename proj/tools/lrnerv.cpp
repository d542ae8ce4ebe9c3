#include <cstdio>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "lrnerv/checkpoint.hpp"
#include "lrnerv/complexity.hpp"
#include "lrnerv/config.hpp"
#include "lrnerv/csv.hpp"
#include "lrnerv/metrics.hpp"
#include "lrnerv/model.hpp"
#include "lrnerv/quantizer.hpp"
#include "lrnerv/rd_sweep.hpp"
#include "lrnerv/svg.hpp"
#include "lrnerv/video.hpp"

using namespace lrnerv;

namespace {

struct Common {
  std::string config;
  std::string frames = "synthetic";
  std::string stages_lr;
  std::optional<double> rho;
  std::optional<std::int64_t> steps;
  std::optional<std::uint64_t> seed;
  std::string csv;
  std::string svg;
  std::string out;
  std::string ckpt;
  std::string distance = "ssim";
  int bits = kDefaultBits;
};

std::vector<Tensor> load_frames(const std::string& spec, const DecoderConfig& c) {
  const std::string prefix = "synthetic";
  if (spec.rfind(prefix, 0) == 0) {
    std::size_t n = c.frames;
    if (spec.size() > prefix.size()) {
      if (spec[prefix.size()] != ':') throw std::invalid_argument("--frames expects a manifest or synthetic[:N]");
      n = std::stoul(spec.substr(prefix.size() + 1));
    }
    return synthetic_video(n, c.height, c.width);
  }
  auto frames = load_video(spec);
  check_frames(c, frames);
  return frames;
}

ConfigFile load_with_overrides(const Common& o) {
  ConfigFile f = load_config(o.config);
  const double rho = o.rho.value_or(f.decoder.plan.rho);
  if (!o.stages_lr.empty()) {
    f.decoder.plan = FactorizationPlan::parse(o.stages_lr, rho);
  } else {
    f.decoder.plan.rho = rho;
  }
  if (o.steps) f.train.steps = *o.steps;
  if (o.seed) f.train.seed = *o.seed;
  f.decoder.validate();
  return f;
}

void write_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
  } else {
    write_text_file(path, text);
    std::cerr << "wrote " << path << '\n';
  }
}

std::string fixed(double v, int digits = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

int cmd_train(const Common& o, int log_every) {
  const ConfigFile f = load_with_overrides(o);
  const auto frames = load_frames(o.frames, f.decoder);
  std::cerr << "training '" << f.decoder.name << "' plan " << f.decoder.plan.label() << " for " << f.train.steps
            << " steps on " << frames.size() << " frames\n";
  CsvTable log{{"step", "loss", "lr"}, {}};
  const FitResult r = fit(frames, f.decoder, f.train, [&](std::int64_t step, double loss, double lr) {
    log.rows.push_back({std::to_string(step), format_number(loss), format_number(lr)});
    if (log_every > 0 && step % log_every == 0) std::cerr << "step " << step << " loss " << fixed(loss, 5) << '\n';
  });
  save_checkpoint(r.model, o.out.empty() ? "model.lrnv" : o.out);
  std::cerr << "wrote " << (o.out.empty() ? "model.lrnv" : o.out) << '\n';
  if (!o.csv.empty()) write_output(o.csv, format_csv(log));
  std::cout << "plan " << f.decoder.plan.label() << "  params " << parameter_count(r.model) << "  mean PSNR "
            << fixed(r.report.mean_psnr) << " dB  (" << fixed(r.report.seconds, 1) << " s)\n";
  return 0;
}

int cmd_eval(const Common& o, const std::string& frames_out) {
  const LoadedCheckpoint ck = load_checkpoint(o.ckpt);
  const auto frames = load_frames(o.frames, ck.model.config);
  const auto recon = render_video(ck.model, frames.size());
  const EvalReport e = evaluate(recon, frames);
  CsvTable t{{"frame", "psnr", "ms_ssim"}, {}};
  for (std::size_t i = 0; i < frames.size(); ++i) {
    t.rows.push_back({std::to_string(i), format_number(e.psnr[i]), format_number(e.ms_ssim[i])});
  }
  if (!o.csv.empty()) write_output(o.csv, format_csv(t));
  if (!frames_out.empty()) write_video(frames_out, recon);
  const int bits = ck.quantized ? ck.quantized->bits : kFloatBits;
  std::cout << "mean PSNR " << fixed(e.mean_psnr) << " dB  mean MS-SSIM " << fixed(e.mean_ms_ssim, 5) << "  bpp "
            << fixed(bpp(std::uint64_t{parameter_count(ck.model)} * static_cast<std::uint64_t>(bits),
                         frames.size(), ck.model.config.height, ck.model.config.width),
                     5)
            << '\n';
  return 0;
}

int cmd_analyze(const Common& o, const std::string& plans) {
  const ConfigFile f = load_with_overrides(o);
  if (plans.empty()) {
    const ComplexityReport r = model_report(f.decoder);
    std::cout << format_report_table(r);
    if (!o.csv.empty()) write_output(o.csv, format_report_csv(r));
    return 0;
  }
  CsvTable t{{"plan", "params", "gflops", "param_reduction_pct", "gflops_reduction_pct", "bpp32", "bpp8"}, {}};
  std::printf("%-8s %12s %10s %12s %12s\n", "plan", "params", "GFLOPs", "params -%", "GFLOPs -%");
  for (const auto& p : parse_plan_list(plans, f.decoder.plan.rho)) {
    const ComplexityReport r = model_report(f.decoder, p);
    std::printf("%-8s %12llu %10.4f %12.2f %12.2f\n", r.plan.c_str(), static_cast<unsigned long long>(r.params),
                r.gflops(), r.param_reduction_pct(), r.gflops_reduction_pct());
    t.rows.push_back({r.plan, std::to_string(r.params), format_number(r.gflops()),
                      format_number(r.param_reduction_pct()), format_number(r.gflops_reduction_pct()),
                      format_number(model_bpp(r.params, 32, f.decoder)), format_number(model_bpp(r.params, 8, f.decoder))});
  }
  if (!o.csv.empty()) write_output(o.csv, format_csv(t));
  return 0;
}

int cmd_quantize(const Common& o, bool per_channel, bool with_eval) {
  const LoadedCheckpoint ck = load_checkpoint(o.ckpt);
  if (ck.quantized) throw std::invalid_argument("'" + o.ckpt + "' is already quantized");
  const Granularity g = per_channel ? Granularity::kPerChannel : Granularity::kPerTensor;
  const QuantizedCheckpoint q = quantize_model(ck.model, o.bits, g);
  const std::string out = o.out.empty() ? "model_int" + std::to_string(o.bits) + ".lrnv" : o.out;
  save_checkpoint(q, out);
  std::cerr << "wrote " << out << '\n';
  if (with_eval) {
    const auto frames = load_frames(o.frames, ck.model.config);
    const QuantizedEval fe = quantized_eval(ck.model, kFloatBits, frames);
    const QuantizedEval qe = quantized_eval(q, frames);
    std::cout << "float32: PSNR " << fixed(fe.eval.mean_psnr) << " dB, bpp " << fixed(fe.bpp, 5) << '\n'
              << "int" << o.bits << ":    PSNR " << fixed(qe.eval.mean_psnr) << " dB, bpp " << fixed(qe.bpp, 5)
              << "  (drop " << fixed(fe.eval.mean_psnr - qe.eval.mean_psnr, 4) << " dB)\n";
  }
  return 0;
}

int cmd_flicker(const Common& o) {
  const LoadedCheckpoint ck = load_checkpoint(o.ckpt);
  const auto frames = load_frames(o.frames, ck.model.config);
  const FlickerReport r = flicker_ratio(render_video(ck.model, frames.size()), frames, make_distance(o.distance));
  if (!o.csv.empty()) write_output(o.csv, flicker_csv(r));
  std::cout << "distance " << r.distance << "  mean flicker ratio " << fixed(r.mean_ratio, 5);
  if (r.static_pairs) std::cout << "  (" << r.static_pairs << " static-content pairs excluded)";
  std::cout << '\n';
  return 0;
}

int cmd_rd_sweep(const Common& o, const std::string& plans, std::size_t jobs, const std::string& ckpt_dir) {
  const ConfigFile f = load_with_overrides(o);
  const auto frames = load_frames(o.frames, f.decoder);
  SweepOptions s;
  s.plans = parse_plan_list(plans, f.decoder.plan.rho);
  s.train = f.train;
  s.bits = o.bits;
  s.distance = o.distance;
  s.jobs = jobs;
  s.checkpoint_dir = ckpt_dir;
  s.log = [](const std::string& m) { std::cerr << m << '\n'; };
  const auto points = rd_sweep(frames, f.decoder, s);
  write_output(o.csv, format_rd_csv(points));
  if (!o.svg.empty()) write_output(o.svg, render_svg(rd_panels(points)));
  for (const auto& p : points) {
    if (p.status != "ok") return 2;
  }
  return 0;
}

int cmd_plot(const std::string& input, const std::string& x, const std::string& y, const std::string& group,
             const std::string& title, const std::string& svg) {
  const CsvTable t = read_csv(input);
  const std::size_t xi = t.column(x), yi = t.column(y);
  const std::optional<std::size_t> gi = group.empty() ? std::nullopt : std::optional(t.column(group));
  PlotPanel p{title.empty() ? y + " vs " + x : title, x, y, {}};
  std::map<std::string, std::size_t> index;
  for (const auto& row : t.rows) {
    const std::string key = gi ? row[*gi] : y;
    auto [it, added] = index.emplace(key, p.series.size());
    if (added) p.series.push_back(PlotSeries{key, {}, {}, true});
    const auto parse = [](const std::string& s) {
      return s.empty() ? std::numeric_limits<double>::quiet_NaN() : std::stod(s);
    };
    p.series[it->second].points.emplace_back(parse(row[xi]), parse(row[yi]));
  }
  write_output(svg, render_svg({p}));
  return 0;
}

int cmd_synth(const Common& o, std::size_t n) {
  const ConfigFile f = load_config(o.config);
  const auto frames = synthetic_video(n ? n : f.decoder.frames, f.decoder.height, f.decoder.width);
  const std::string dir = o.out.empty() ? "synthetic" : o.out;
  write_video(dir, frames);
  std::cerr << "wrote " << frames.size() << " frames and " << dir << "/video.txt\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Low-rank convolution NeRV decoder: training, complexity, quantization and RD studies"};
  app.require_subcommand(1);
  Common o;
  int log_every = 100;
  std::string plans = "-;4;3-4;2-4;1-4;0-4";
  std::string analyze_plans, frames_out, plot_in, plot_x, plot_y, plot_group, plot_title;
  std::size_t jobs = 1, synth_frames = 0;
  std::string ckpt_dir;
  bool per_channel = false, with_eval = false;

  auto add_model_flags = [&](CLI::App* c, bool need_config) {
    auto* cfg = c->add_option("--config", o.config, "Config file (key = value)");
    if (need_config) cfg->required()->check(CLI::ExistingFile);
    c->add_option("--stages-lr", o.stages_lr, "Factorized stages, e.g. 4, 3-4, 0,2 or - for dense");
    c->add_option("--rho", o.rho, "Rank ratio in (0, 1] (default 0.25)");
  };
  auto add_frames = [&](CLI::App* c) {
    c->add_option("--frames", o.frames, "Video manifest, or synthetic[:N]")->capture_default_str();
  };

  auto* train = app.add_subcommand("train", "Fit a decoder to a video");
  add_model_flags(train, true);
  add_frames(train);
  train->add_option("--steps", o.steps, "Optimizer steps");
  train->add_option("--seed", o.seed, "Random seed");
  train->add_option("--out", o.out, "Checkpoint path (default model.lrnv)");
  train->add_option("--csv", o.csv, "Per-step loss log");
  train->add_option("--log-every", log_every, "Progress interval in steps (0 = quiet)")->capture_default_str();

  auto* eval = app.add_subcommand("eval", "Decode a checkpoint and score it against a video");
  eval->add_option("--ckpt", o.ckpt, "Checkpoint")->required()->check(CLI::ExistingFile);
  add_frames(eval);
  eval->add_option("--csv", o.csv, "Per-frame PSNR / MS-SSIM");
  eval->add_option("--out", frames_out, "Directory for the decoded frames (PPM + manifest)");

  auto* analyze = app.add_subcommand("analyze", "Parameter and GFLOP accounting (no training)");
  add_model_flags(analyze, true);
  analyze->add_option("--plans", analyze_plans, "Compare plans, e.g. \"-;4;3-4;2-4;1-4;0-4\"");
  analyze->add_option("--csv", o.csv, "CSV output");

  auto* quantize = app.add_subcommand("quantize", "Post-training weight quantization");
  quantize->add_option("--ckpt", o.ckpt, "Float checkpoint")->required()->check(CLI::ExistingFile);
  quantize->add_option("--bits", o.bits, "Bit width, 2..8")->capture_default_str();
  quantize->add_flag("--per-channel", per_channel, "One scale per output channel");
  quantize->add_option("--out", o.out, "Quantized checkpoint path");
  quantize->add_flag("--eval", with_eval, "Report float and quantized PSNR on --frames");
  add_frames(quantize);

  auto* flicker = app.add_subcommand("flicker", "Temporal flicker ratio of a decoded video");
  flicker->add_option("--ckpt", o.ckpt, "Checkpoint")->required()->check(CLI::ExistingFile);
  add_frames(flicker);
  flicker->add_option("--distance", o.distance, "ssim or lpips-file:<path>")->capture_default_str();
  flicker->add_option("--csv", o.csv, "Per-pair series (t, d_recon, d_gt, ratio)");

  auto* sweep = app.add_subcommand("rd-sweep", "Train and evaluate one model per factorization plan");
  add_model_flags(sweep, true);
  add_frames(sweep);
  sweep->add_option("--plans", plans, "';'-separated plans")->capture_default_str();
  sweep->add_option("--steps", o.steps, "Optimizer steps per plan");
  sweep->add_option("--seed", o.seed, "Random seed shared by all plans");
  sweep->add_option("--bits", o.bits, "Quantized bit width (32 = float only)")->capture_default_str();
  sweep->add_option("--distance", o.distance, "Flicker distance: ssim or lpips-file:<path>")->capture_default_str();
  sweep->add_option("--csv", o.csv, "CSV output (default stdout)");
  sweep->add_option("--svg", o.svg, "SVG with RD and complexity plots");
  sweep->add_option("--jobs", jobs, "Plans trained concurrently")->capture_default_str();
  sweep->add_option("--ckpt-dir", ckpt_dir, "Save each plan's float and quantized checkpoints here");

  auto* plot = app.add_subcommand("plot", "Line plot of two columns of any emitted CSV");
  plot->add_option("--csv", plot_in, "Input CSV")->required()->check(CLI::ExistingFile);
  plot->add_option("--x", plot_x, "X column")->required();
  plot->add_option("--y", plot_y, "Y column")->required();
  plot->add_option("--group", plot_group, "Column splitting rows into series");
  plot->add_option("--title", plot_title, "Plot title");
  plot->add_option("--svg", o.svg, "SVG output (default stdout)");

  auto* synth = app.add_subcommand("synth", "Write the synthetic test video as PPM frames");
  synth->add_option("--config", o.config, "Config giving the resolution and frame count")
      ->required()
      ->check(CLI::ExistingFile);
  synth->add_option("--count", synth_frames, "Frame count override");
  synth->add_option("--out", o.out, "Output directory (default synthetic)");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*train) return cmd_train(o, log_every);
    if (*eval) return cmd_eval(o, frames_out);
    if (*analyze) return cmd_analyze(o, analyze_plans);
    if (*quantize) return cmd_quantize(o, per_channel, with_eval);
    if (*flicker) return cmd_flicker(o);
    if (*sweep) return cmd_rd_sweep(o, plans, jobs, ckpt_dir);
    if (*plot) return cmd_plot(plot_in, plot_x, plot_y, plot_group, plot_title, o.svg);
    if (*synth) return cmd_synth(o, synth_frames);
  } catch (const std::exception& e) {
    std::cerr << "lrnerv: error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
