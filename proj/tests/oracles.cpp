#include "oracles.hpp"

#include <algorithm>
#include <cmath>

namespace oracle {

Tensor direct_conv2d(const Tensor& x, const Tensor& w, const Tensor* bias, std::size_t ph, std::size_t pw,
                     std::uint64_t* multiplies) {
  const std::size_t c_in = x.dim(0), h = x.dim(1), wd = x.dim(2);
  const std::size_t c_out = w.dim(0), kh = w.dim(2), kw = w.dim(3);
  const std::size_t ho = h + 2 * ph - kh + 1, wo = wd + 2 * pw - kw + 1;
  Tensor y({c_out, ho, wo});
  for (std::size_t co = 0; co < c_out; ++co)
    for (std::size_t i = 0; i < ho; ++i)
      for (std::size_t j = 0; j < wo; ++j) {
        double s = bias ? (*bias)[co] : 0.0;
        for (std::size_t ci = 0; ci < c_in; ++ci)
          for (std::size_t u = 0; u < kh; ++u)
            for (std::size_t v = 0; v < kw; ++v) {
              const long r = static_cast<long>(i + u) - static_cast<long>(ph);
              const long c = static_cast<long>(j + v) - static_cast<long>(pw);
              const bool inside = r >= 0 && c >= 0 && r < static_cast<long>(h) && c < static_cast<long>(wd);
              const double xv = inside ? x[(ci * h + static_cast<std::size_t>(r)) * wd + static_cast<std::size_t>(c)] : 0.0;
              s += w[((co * c_in + ci) * kh + u) * kw + v] * xv;
              if (multiplies) ++*multiplies;
            }
        y[(co * ho + i) * wo + j] = s;
      }
  return y;
}

Tensor random_tensor(lrnerv::Shape shape, lrnerv::Rng& rng, double lo, double hi) {
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

std::vector<double> numeric_gradient(const std::function<double()>& f, Tensor& x, double h) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + h;
    const double up = f();
    x[i] = keep - h;
    const double down = f();
    x[i] = keep;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

double relative_error(const Tensor& analytic, const std::vector<double>& numeric) {
  double diff = 0.0, na = 0.0, nn = 0.0;
  for (std::size_t i = 0; i < numeric.size(); ++i) {
    diff += (analytic[i] - numeric[i]) * (analytic[i] - numeric[i]);
    na += analytic[i] * analytic[i];
    nn += numeric[i] * numeric[i];
  }
  return std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nn), 1e-12});
}

double constant_patch_ssim(double a, double b, double c1) { return (2.0 * a * b + c1) / (a * a + b * b + c1); }

double mse(const Tensor& a, const Tensor& b) {
  long double s = 0.0L;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const long double d = static_cast<long double>(a[i]) - static_cast<long double>(b[i]);
    s += d * d;
  }
  return static_cast<double>(s / static_cast<long double>(a.size()));
}

lrnerv::DecoderConfig tiny_config() {
  lrnerv::DecoderConfig c;
  c.name = "tiny";
  c.height = 16;
  c.width = 32;
  c.frames = 4;
  c.embed_levels = 4;
  c.stem_hidden = 8;
  c.stem_channels = 4;
  c.stem_height = 2;
  c.stem_width = 4;
  c.stages = {{4, 16, 2, 0.0}, {4, 16, 2, 0.0}, {4, 16, 2, 0.0}, {4, 8, 1, 0.0}, {8, 8, 1, 0.0}};
  return c;
}

}  // namespace oracle
