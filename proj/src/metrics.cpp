#include "lrnerv/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "lrnerv/config.hpp"
#include "lrnerv/container.hpp"
#include "lrnerv/ops.hpp"

namespace lrnerv {
namespace {

void require_same_frame(const char* what, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw std::invalid_argument(std::string(what) + ": shape mismatch " + shape_string(a.shape()) +
                                " vs " + shape_string(b.shape()));
  }
}

Tensor product(const Tensor& a, const Tensor& b) {
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
  return out;
}

}  // namespace

double mse(const Tensor& a, const Tensor& b) {
  require_same_frame("mse", a, b);
  if (a.size() == 0) throw std::invalid_argument("mse: empty frames");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s / static_cast<double>(a.size());
}

double psnr(const Tensor& a, const Tensor& b) {
  const double m = mse(a, b);
  if (m < 1e-10) return kPsnrCapDb;
  return std::min(kPsnrCapDb, -10.0 * std::log10(m));
}

std::vector<SsimTerms> ssim_per_channel(const Tensor& a, const Tensor& b, const SsimParams& p) {
  require_same_frame("ssim", a, b);
  if (a.rank() != 3) throw std::invalid_argument("ssim: frames must be C x H x W");
  const Tensor window = gaussian_window(p.window, p.sigma);
  const Tensor mu_a = separable_filter_valid(a, window);
  const Tensor mu_b = separable_filter_valid(b, window);
  const Tensor e_aa = separable_filter_valid(product(a, a), window);
  const Tensor e_bb = separable_filter_valid(product(b, b), window);
  const Tensor e_ab = separable_filter_valid(product(a, b), window);
  const double c1 = p.c1(), c2 = p.c2();

  const std::size_t channels = mu_a.dim(0);
  const std::size_t plane = mu_a.dim(1) * mu_a.dim(2);
  std::vector<SsimTerms> out(channels);
  for (std::size_t c = 0; c < channels; ++c) {
    double ssim_sum = 0.0, cs_sum = 0.0;
    for (std::size_t i = c * plane; i < (c + 1) * plane; ++i) {
      const double ma = mu_a[i], mb = mu_b[i];
      const double mab = ma * mb;
      const double var_a = e_aa[i] - ma * ma;
      const double var_b = e_bb[i] - mb * mb;
      const double cov = e_ab[i] - mab;
      const double lum = (2.0 * mab + c1) / (ma * ma + mb * mb + c1);
      const double cs = (2.0 * cov + c2) / (var_a + var_b + c2);
      ssim_sum += lum * cs;
      cs_sum += cs;
    }
    out[c].ssim = ssim_sum / static_cast<double>(plane);
    out[c].cs = cs_sum / static_cast<double>(plane);
  }
  return out;
}

double ssim(const Tensor& a, const Tensor& b, const SsimParams& p) {
  const auto terms = ssim_per_channel(a, b, p);
  double s = 0.0;
  for (const auto& t : terms) s += t.ssim;
  return s / static_cast<double>(terms.size());
}

std::size_t ms_ssim_scales(std::size_t height, std::size_t width, std::size_t requested,
                           const SsimParams& p) {
  if (requested == 0 || requested > 5) throw std::invalid_argument("ms_ssim: scales must be 1..5");
  const std::size_t m = std::min(height, width);
  std::size_t scales = requested;
  while (scales > 0 && m < (std::size_t{1} << (scales - 1)) * p.window) --scales;
  if (scales == 0) {
    throw std::invalid_argument("ms_ssim: frame " + std::to_string(height) + "x" +
                                std::to_string(width) + " is smaller than the " +
                                std::to_string(p.window) + "-tap window");
  }
  return scales;
}

double ms_ssim(const Tensor& a, const Tensor& b, std::size_t scales, const SsimParams& p) {
  require_same_frame("ms_ssim", a, b);
  if (a.rank() != 3) throw std::invalid_argument("ms_ssim: frames must be C x H x W");
  const std::size_t m = ms_ssim_scales(a.dim(1), a.dim(2), scales, p);
  double weight_sum = 0.0;
  for (std::size_t j = 0; j < m; ++j) weight_sum += kMsSsimWeights[j];

  const std::size_t channels = a.dim(0);
  std::vector<double> per_channel(channels, 1.0);
  Tensor x = a, y = b;
  for (std::size_t j = 0; j < m; ++j) {
    const auto terms = ssim_per_channel(x, y, p);
    const double w = kMsSsimWeights[j] / weight_sum;
    for (std::size_t c = 0; c < channels; ++c) {
      const double v = j + 1 == m ? terms[c].ssim : terms[c].cs;
      per_channel[c] *= std::pow(std::max(v, 0.0), w);
    }
    if (j + 1 < m) {
      x = avg_pool2(x);
      y = avg_pool2(y);
    }
  }
  double s = 0.0;
  for (double v : per_channel) s += v;
  return s / static_cast<double>(channels);
}

FramePairDistance ssim_distance() {
  return FramePairDistance{"ssim", [](const Tensor& a, const Tensor& b) {
                             return std::max(0.0, (1.0 - ssim(a, b)) / 2.0);
                           }};
}

namespace {

// Feature extractor read from an LRNV container. Metadata keys:
//   layers = N, stride = s0,..., pad = p0,..., pool_before = 0/1,...
// Records: conv{i}.weight (C_out x C_in x k x k), conv{i}.bias, lin{i}.weight
// (C_out, nonnegative), optional shift / scale (3) applied to inputs mapped
// to [-1, 1].
struct LpipsNet {
  struct Layer {
    Tensor weight, bias, lin;
    std::size_t stride = 1, pad = 0;
    bool pool_before = false;
  };
  std::vector<Layer> layers;
  Tensor shift, scale;
};

Tensor strided_conv_relu(const Tensor& x, const LpipsNet::Layer& l) {
  const std::size_t c_in = x.dim(0), h = x.dim(1), w = x.dim(2);
  const std::size_t c_out = l.weight.dim(0), kh = l.weight.dim(2), kw = l.weight.dim(3);
  if (l.weight.dim(1) != c_in) throw std::invalid_argument("lpips: channel mismatch");
  if (h + 2 * l.pad < kh || w + 2 * l.pad < kw) throw std::invalid_argument("lpips: frame too small");
  const std::size_t ho = (h + 2 * l.pad - kh) / l.stride + 1;
  const std::size_t wo = (w + 2 * l.pad - kw) / l.stride + 1;
  Tensor out({c_out, ho, wo});
  for (std::size_t co = 0; co < c_out; ++co)
    for (std::size_t oy = 0; oy < ho; ++oy)
      for (std::size_t ox = 0; ox < wo; ++ox) {
        double s = l.bias.empty() ? 0.0 : l.bias[co];
        for (std::size_t ci = 0; ci < c_in; ++ci)
          for (std::size_t u = 0; u < kh; ++u) {
            const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * l.stride + u) -
                                      static_cast<std::ptrdiff_t>(l.pad);
            if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
            for (std::size_t v = 0; v < kw; ++v) {
              const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * l.stride + v) -
                                        static_cast<std::ptrdiff_t>(l.pad);
              if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w)) continue;
              s += l.weight[((co * c_in + ci) * kh + u) * kw + v] *
                   x.at(ci, static_cast<std::size_t>(iy), static_cast<std::size_t>(ix));
            }
          }
        out.at(co, oy, ox) = std::max(0.0, s);
      }
  return out;
}

Tensor max_pool_3x3_s2(const Tensor& x) {
  const std::size_t c = x.dim(0), h = x.dim(1), w = x.dim(2);
  if (h < 3 || w < 3) return x;
  const std::size_t ho = (h - 3) / 2 + 1, wo = (w - 3) / 2 + 1;
  Tensor out({c, ho, wo});
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t y = 0; y < ho; ++y)
      for (std::size_t xx = 0; xx < wo; ++xx) {
        double m = x.at(ch, 2 * y, 2 * xx);
        for (std::size_t u = 0; u < 3; ++u)
          for (std::size_t v = 0; v < 3; ++v) m = std::max(m, x.at(ch, 2 * y + u, 2 * xx + v));
        out.at(ch, y, xx) = m;
      }
  return out;
}

std::vector<Tensor> lpips_features(const LpipsNet& net, const Tensor& frame) {
  Tensor x(frame.shape());
  const std::size_t plane = frame.dim(1) * frame.dim(2);
  for (std::size_t i = 0; i < frame.size(); ++i) {
    double v = 2.0 * frame[i] - 1.0;
    const std::size_t c = i / plane;
    if (!net.shift.empty()) v = (v - net.shift[c]) / net.scale[c];
    x[i] = v;
  }
  std::vector<Tensor> feats;
  for (const auto& layer : net.layers) {
    if (layer.pool_before) x = max_pool_3x3_s2(x);
    x = strided_conv_relu(x, layer);
    // Unit-normalize over channels at each position.
    const std::size_t c = x.dim(0), pl = x.dim(1) * x.dim(2);
    Tensor n(x.shape());
    for (std::size_t i = 0; i < pl; ++i) {
      double s = 0.0;
      for (std::size_t ch = 0; ch < c; ++ch) s += x[ch * pl + i] * x[ch * pl + i];
      const double norm = std::sqrt(s) + 1e-10;
      for (std::size_t ch = 0; ch < c; ++ch) n[ch * pl + i] = x[ch * pl + i] / norm;
    }
    feats.push_back(std::move(n));
  }
  return feats;
}

std::vector<std::size_t> parse_size_list(const std::map<std::string, std::string>& kv,
                                         const std::string& key, std::size_t n, std::size_t fallback) {
  std::vector<std::size_t> out(n, fallback);
  const auto it = kv.find(key);
  if (it == kv.end()) return out;
  std::stringstream ss(it->second);
  std::string item;
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::getline(ss, item, ',')) throw std::invalid_argument("lpips: '" + key + "' too short");
    out[i] = std::stoul(item);
  }
  return out;
}

}  // namespace

FramePairDistance lpips_file_distance(const std::string& path) {
  const Container c = decode_container(read_file_bytes(path));
  const auto kv = parse_key_values(c.metadata, "lpips weights");
  const auto layers_it = kv.find("layers");
  if (layers_it == kv.end()) throw std::invalid_argument("lpips weights: missing 'layers' key");
  const std::size_t n = std::stoul(layers_it->second);
  if (n == 0) throw std::invalid_argument("lpips weights: zero layers");
  const auto strides = parse_size_list(kv, "stride", n, 1);
  const auto pads = parse_size_list(kv, "pad", n, 0);
  const auto pools = parse_size_list(kv, "pool_before", n, 0);

  auto net = std::make_shared<LpipsNet>();
  auto need = [&](const std::string& name) {
    const TensorRecord* r = c.find(name);
    if (!r) throw std::invalid_argument("lpips weights: missing tensor '" + name + "'");
    return tensor_from_f32(*r);
  };
  std::size_t channels = 3;
  for (std::size_t i = 0; i < n; ++i) {
    LpipsNet::Layer l;
    const std::string p = std::to_string(i);
    l.weight = need("conv" + p + ".weight");
    if (l.weight.rank() != 4 || l.weight.dim(1) != channels) {
      throw std::invalid_argument("lpips weights: conv" + p + " has shape " +
                                  shape_string(l.weight.shape()));
    }
    if (c.find("conv" + p + ".bias")) l.bias = need("conv" + p + ".bias");
    l.lin = need("lin" + p + ".weight");
    if (l.lin.size() != l.weight.dim(0)) throw std::invalid_argument("lpips weights: lin" + p + " size");
    for (double v : l.lin.data()) {
      if (v < 0) throw std::invalid_argument("lpips weights: lin" + p + " must be nonnegative");
    }
    l.stride = std::max<std::size_t>(1, strides[i]);
    l.pad = pads[i];
    l.pool_before = pools[i] != 0;
    channels = l.weight.dim(0);
    net->layers.push_back(std::move(l));
  }
  if (c.find("shift") && c.find("scale")) {
    net->shift = need("shift");
    net->scale = need("scale");
  }
  return FramePairDistance{"lpips-file", [net](const Tensor& a, const Tensor& b) {
                             require_same_frame("lpips", a, b);
                             const auto fa = lpips_features(*net, a);
                             const auto fb = lpips_features(*net, b);
                             double total = 0.0;
                             for (std::size_t l = 0; l < fa.size(); ++l) {
                               const Tensor& lin = net->layers[l].lin;
                               const std::size_t ch = fa[l].dim(0);
                               const std::size_t pl = fa[l].dim(1) * fa[l].dim(2);
                               double s = 0.0;
                               for (std::size_t c = 0; c < ch; ++c)
                                 for (std::size_t i = 0; i < pl; ++i) {
                                   const double d = fa[l][c * pl + i] - fb[l][c * pl + i];
                                   s += lin[c] * d * d;
                                 }
                               total += s / static_cast<double>(pl);
                             }
                             return total;
                           }};
}

FramePairDistance make_distance(const std::string& spec) {
  if (spec == "ssim") return ssim_distance();
  const std::string prefix = "lpips-file:";
  if (spec.rfind(prefix, 0) == 0) {
    const std::string path = spec.substr(prefix.size());
    if (path.empty()) {
      throw std::invalid_argument("distance 'lpips-file' needs a weight file: lpips-file:<path>");
    }
    return lpips_file_distance(path);
  }
  if (spec == "lpips" || spec == "lpips-file") {
    throw std::invalid_argument(
        "LPIPS weights are not bundled; pass --distance lpips-file:<path> with a weight container");
  }
  throw std::invalid_argument("unknown distance '" + spec + "' (expected ssim or lpips-file:<path>)");
}

FlickerReport flicker_ratio(const std::vector<Tensor>& recon, const std::vector<Tensor>& gt,
                            const FramePairDistance& d, double eps) {
  if (recon.size() != gt.size()) {
    throw std::invalid_argument("flicker_ratio: " + std::to_string(recon.size()) +
                                " reconstructed frames vs " + std::to_string(gt.size()) +
                                " ground-truth frames");
  }
  if (recon.size() < 2) throw std::invalid_argument("flicker_ratio: need at least 2 frames");
  FlickerReport r;
  r.distance = d.name;
  double sum = 0.0, sum_all = 0.0;
  std::size_t counted = 0;
  for (std::size_t t = 1; t < recon.size(); ++t) {
    require_same_frame("flicker_ratio", recon[t], gt[t]);
    const double dr = d(recon[t], recon[t - 1]);
    const double dg = d(gt[t], gt[t - 1]);
    const double ratio = dr / std::max(dg, eps);
    const bool is_static = dg <= eps;
    r.d_recon.push_back(dr);
    r.d_gt.push_back(dg);
    r.ratio.push_back(ratio);
    r.static_pair.push_back(is_static);
    sum_all += ratio;
    if (is_static) {
      ++r.static_pairs;
    } else {
      sum += ratio;
      ++counted;
    }
  }
  r.mean_ratio = counted > 0 ? sum / static_cast<double>(counted)
                             : sum_all / static_cast<double>(r.ratio.size());
  return r;
}

std::string flicker_csv(const FlickerReport& report) {
  std::ostringstream os;
  os << "t,d_recon,d_gt,ratio\n";
  char buf[128];
  for (std::size_t i = 0; i < report.ratio.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.9g,%.9g,%.9g\n", i + 1, report.d_recon[i], report.d_gt[i],
                  report.ratio[i]);
    os << buf;
  }
  return os.str();
}

}  // namespace lrnerv
