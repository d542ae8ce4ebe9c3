#include "lrnerv/rd_sweep.hpp"

#include <atomic>
#include <algorithm>
#include <filesystem>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "lrnerv/checkpoint.hpp"
#include "lrnerv/complexity.hpp"
#include "lrnerv/csv.hpp"
#include "lrnerv/model.hpp"

namespace lrnerv {
namespace {

const std::vector<std::string> kColumns = {"plan",   "precision", "bits",    "params",
                                           "gflops", "bpp",       "psnr",    "ms_ssim",
                                           "param_reduction_pct", "flicker_ratio", "status"};

std::string file_label(const std::string& plan) {
  if (plan == "-") return "dense";
  std::string out;
  for (char c : plan) out += c == ',' ? '_' : c;
  return out;
}

std::vector<RdPoint> sweep_plan(const std::vector<Tensor>& frames, const DecoderConfig& config,
                                const FactorizationPlan& plan, const SweepOptions& o,
                                const FramePairDistance& distance) {
  const DecoderConfig c = config.with_plan(plan);
  const ComplexityReport cost = model_report(c, plan);
  RdPoint base;
  base.plan = plan.label();
  base.params = cost.params;
  base.gflops = cost.gflops();
  base.param_reduction_pct = cost.param_reduction_pct();

  RdPoint fp = base, q = base;
  fp.precision = "float32";
  fp.bits = kFloatBits;
  q.bits = o.bits;
  q.precision = o.bits == kFloatBits ? "float32" : "int" + std::to_string(o.bits);
  try {
    const FitResult fit_result = fit(frames, c, o.train);
    const NervModel& model = fit_result.model;

    const QuantizedEval fe = quantized_eval(model, kFloatBits, frames);
    fp.bpp = fe.bpp;
    fp.psnr = fe.eval.mean_psnr;
    fp.ms_ssim = fe.eval.mean_ms_ssim;
    fp.flicker_ratio = flicker_ratio(render_video(model, frames.size()), frames, distance).mean_ratio;

    if (o.bits == kFloatBits) return {fp};
    const QuantizedCheckpoint qc = quantize_model(model, o.bits);
    const QuantizedEval qe = quantized_eval(qc, frames);
    q.bpp = qe.bpp;
    q.psnr = qe.eval.mean_psnr;
    q.ms_ssim = qe.eval.mean_ms_ssim;
    q.flicker_ratio = flicker_ratio(render_video(dequantize_model(qc), frames.size()), frames, distance).mean_ratio;

    if (!o.checkpoint_dir.empty()) {
      std::filesystem::create_directories(o.checkpoint_dir);
      const auto stem = std::filesystem::path(o.checkpoint_dir) / ("plan_" + file_label(base.plan));
      save_checkpoint(model, stem.string() + ".lrnv");
      save_checkpoint(qc, stem.string() + "_int" + std::to_string(o.bits) + ".lrnv");
    }
    return {fp, q};
  } catch (const std::exception& e) {
    fp.status = q.status = std::string("failed: ") + e.what();
    fp.bpp = fp.psnr = fp.ms_ssim = fp.flicker_ratio = std::numeric_limits<double>::quiet_NaN();
    q.bpp = q.psnr = q.ms_ssim = q.flicker_ratio = std::numeric_limits<double>::quiet_NaN();
    if (o.bits == kFloatBits) return {fp};
    return {fp, q};
  }
}

double to_double(const std::string& s) {
  if (s.empty()) return std::numeric_limits<double>::quiet_NaN();
  return std::stod(s);
}

}  // namespace

std::vector<FactorizationPlan> parse_plan_list(const std::string& text, double rho) {
  std::vector<FactorizationPlan> plans;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ';')) plans.push_back(FactorizationPlan::parse(item, rho));
  if (plans.empty()) throw std::invalid_argument("empty plan list");
  return plans;
}

std::vector<RdPoint> rd_sweep(const std::vector<Tensor>& frames, const DecoderConfig& config,
                              const SweepOptions& o) {
  check_frames(config, frames);
  if (o.plans.empty()) throw std::invalid_argument("rd_sweep: no plans given");
  if (o.bits != kFloatBits && (o.bits < 2 || o.bits > 8)) {
    throw std::invalid_argument("rd_sweep: bits must be 2..8 or 32");
  }
  for (const auto& p : o.plans) config.with_plan(p).validate();
  const FramePairDistance distance = make_distance(o.distance);

  std::vector<std::vector<RdPoint>> per_plan(o.plans.size());
  std::mutex log_mutex;
  auto run = [&](std::size_t i) {
    if (o.log) {
      std::lock_guard lock(log_mutex);
      o.log("training plan " + o.plans[i].label());
    }
    per_plan[i] = sweep_plan(frames, config, o.plans[i], o, distance);
    if (o.log) {
      std::lock_guard lock(log_mutex);
      std::ostringstream msg;
      msg << "plan " << o.plans[i].label() << ": " << per_plan[i].front().status;
      if (per_plan[i].front().status == "ok") msg << ", psnr " << format_number(per_plan[i].front().psnr);
      o.log(msg.str());
    }
  };
  if (o.jobs <= 1) {
    for (std::size_t i = 0; i < o.plans.size(); ++i) run(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    for (std::size_t w = 0; w < std::min(o.jobs, o.plans.size()); ++w) {
      workers.emplace_back([&] {
        for (std::size_t i = next++; i < o.plans.size(); i = next++) run(i);
      });
    }
    for (auto& t : workers) t.join();
  }
  std::vector<RdPoint> out;
  for (auto& rows : per_plan) out.insert(out.end(), rows.begin(), rows.end());
  return out;
}

std::string format_rd_csv(const std::vector<RdPoint>& points) {
  CsvTable t;
  t.header = kColumns;
  for (const RdPoint& p : points) {
    t.rows.push_back({p.plan, p.precision, std::to_string(p.bits), std::to_string(p.params), format_number(p.gflops),
                      format_number(p.bpp), format_number(p.psnr), format_number(p.ms_ssim),
                      format_number(p.param_reduction_pct), format_number(p.flicker_ratio), p.status});
  }
  return format_csv(t);
}

std::vector<RdPoint> parse_rd_csv(const std::string& text) {
  const CsvTable t = parse_csv(text);
  std::vector<std::size_t> col;
  for (const auto& name : kColumns) col.push_back(t.column(name));
  std::vector<RdPoint> out;
  for (const auto& r : t.rows) {
    RdPoint p;
    p.plan = r[col[0]];
    p.precision = r[col[1]];
    p.bits = std::stoi(r[col[2]]);
    p.params = std::stoul(r[col[3]]);
    p.gflops = to_double(r[col[4]]);
    p.bpp = to_double(r[col[5]]);
    p.psnr = to_double(r[col[6]]);
    p.ms_ssim = to_double(r[col[7]]);
    p.param_reduction_pct = to_double(r[col[8]]);
    p.flicker_ratio = to_double(r[col[9]]);
    p.status = r[col[10]];
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<PlotPanel> rd_panels(const std::vector<RdPoint>& points) {
  PlotPanel rd{"Rate-distortion", "bpp", "PSNR (dB)", {}};
  std::map<std::string, std::size_t> by_precision;
  for (const RdPoint& p : points) {
    auto [it, added] = by_precision.emplace(p.precision, rd.series.size());
    if (added) rd.series.push_back(PlotSeries{p.precision, {}, {}, true});
    rd.series[it->second].points.emplace_back(p.bpp, p.psnr);
    rd.series[it->second].labels.push_back(p.plan);
  }
  PlotPanel cost{"Complexity", "GFLOPs per frame", "parameters", {}};
  PlotSeries s{"plans", {}, {}, true};
  for (const RdPoint& p : points) {
    if (p.precision != "float32") continue;
    s.points.emplace_back(p.gflops, static_cast<double>(p.params));
    s.labels.push_back(p.plan);
  }
  cost.series.push_back(std::move(s));
  return {rd, cost};
}

}  // namespace lrnerv
