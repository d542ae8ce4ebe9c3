#include "lrnerv/complexity.hpp"

#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace lrnerv {
namespace {

void walk(const DecoderConfig& c, const FactorizationPlan& plan, std::vector<LayerCost>& out) {
  const std::size_t e = c.embed_dim();
  out.push_back({"stem.0", e * c.stem_hidden + c.stem_hidden, std::uint64_t{e} * c.stem_hidden});
  out.push_back({"stem.1", c.stem_hidden * c.stem_outputs() + c.stem_outputs(),
                 std::uint64_t{c.stem_hidden} * c.stem_outputs()});
  const std::size_t k = c.kernel;
  for (std::size_t i = 0; i < c.stages.size(); ++i) {
    const StageSpec& s = c.stages[i];
    const auto [h, w] = c.stage_input_size(i);
    const std::string name = "stages." + std::to_string(i);
    if (plan.contains(i)) {
      const std::size_t r = select_rank(s.c_in, s.c_out, s.rho > 0.0 ? s.rho : plan.rho);
      out.push_back({name + ".proj", r * s.c_in * k, conv_macs(s.c_in, r, k, 1, h, w)});
      out.push_back({name + ".recon", s.c_out * r * k + s.c_out, conv_macs(r, s.c_out, 1, k, h, w)});
    } else {
      out.push_back({name, dense_param_count(s.c_in, s.c_out, k) + s.c_out,
                     conv_macs(s.c_in, s.c_out, k, k, h, w)});
    }
  }
  const std::size_t hc = c.head_channels(), hk = c.head_kernel;
  out.push_back({"head", 3 * hc * hk * hk + 3, conv_macs(hc, 3, hk, hk, c.height, c.width)});
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

}  // namespace

double ComplexityReport::param_reduction_pct() const {
  if (baseline_params == 0) return 0.0;
  return 100.0 * (static_cast<double>(baseline_params) - static_cast<double>(params)) /
         static_cast<double>(baseline_params);
}

double ComplexityReport::gflops_reduction_pct() const {
  if (baseline_macs == 0) return 0.0;
  return 100.0 * (static_cast<double>(baseline_macs) - static_cast<double>(macs)) /
         static_cast<double>(baseline_macs);
}

std::uint64_t conv_macs(std::size_t c_in, std::size_t c_out, std::size_t kh, std::size_t kw,
                        std::size_t h_out, std::size_t w_out) {
  return std::uint64_t{c_out} * h_out * w_out * c_in * kh * kw;
}

ComplexityReport model_report(const DecoderConfig& config, const FactorizationPlan& plan) {
  config.with_plan(plan).validate();
  ComplexityReport r;
  r.plan = plan.label();
  walk(config, plan, r.layers);
  for (const auto& l : r.layers) {
    r.params += l.params;
    r.macs += l.macs;
  }
  std::vector<LayerCost> dense;
  walk(config, FactorizationPlan{{}, plan.rho}, dense);
  for (const auto& l : dense) {
    r.baseline_params += l.params;
    r.baseline_macs += l.macs;
  }
  return r;
}

ComplexityReport model_report(const DecoderConfig& config) { return model_report(config, config.plan); }

double param_reduction(const DecoderConfig& config, const FactorizationPlan& plan) {
  return model_report(config, plan).param_reduction_pct();
}

double bpp(std::uint64_t total_param_bits, std::size_t frames, std::size_t height, std::size_t width) {
  const std::uint64_t pixels = std::uint64_t{frames} * height * width;
  if (pixels == 0) throw std::invalid_argument("bpp: frame count and resolution must be positive");
  return static_cast<double>(total_param_bits) / static_cast<double>(pixels);
}

double model_bpp(std::uint64_t params, int bits_per_weight, const DecoderConfig& config) {
  if (bits_per_weight <= 0) throw std::invalid_argument("bpp: bit width must be positive");
  return bpp(params * static_cast<std::uint64_t>(bits_per_weight), config.frames, config.height, config.width);
}

std::string format_report_table(const ComplexityReport& r) {
  std::ostringstream os;
  char line[160];
  std::snprintf(line, sizeof line, "%-18s %12s %16s %10s %11s\n", "layer", "params", "MACs", "GFLOPs",
                "cumulative");
  os << line;
  double cum = 0.0;
  for (const auto& l : r.layers) {
    cum += l.gflops();
    std::snprintf(line, sizeof line, "%-18s %12llu %16llu %10.4f %11.4f\n", l.name.c_str(),
                  static_cast<unsigned long long>(l.params), static_cast<unsigned long long>(l.macs),
                  l.gflops(), cum);
    os << line;
  }
  std::snprintf(line, sizeof line, "%-18s %12llu %16llu %10.4f\n", "total",
                static_cast<unsigned long long>(r.params), static_cast<unsigned long long>(r.macs), r.gflops());
  os << line;
  os << "plan " << r.plan << ": dense baseline " << r.baseline_params << " params, "
     << fmt("%.4f", r.baseline_gflops()) << " GFLOPs; reduction " << fmt("%.2f", r.param_reduction_pct())
     << "% params, " << fmt("%.2f", r.gflops_reduction_pct()) << "% GFLOPs\n";
  return os.str();
}

std::string format_report_csv(const ComplexityReport& r) {
  std::ostringstream os;
  os << "layer,params,macs,gflops,cumulative\n";
  double cum = 0.0;
  for (const auto& l : r.layers) {
    cum += l.gflops();
    os << l.name << ',' << l.params << ',' << l.macs << ',' << fmt("%.9g", l.gflops()) << ','
       << fmt("%.9g", cum) << '\n';
  }
  return os.str();
}

}  // namespace lrnerv
