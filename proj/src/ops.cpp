#include "lrnerv/ops.hpp"

#include <Eigen/Core>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>

namespace lrnerv {
namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;

struct ConvGeometry {
  std::size_t c_in, h, w;
  std::size_t c_out, kh, kw;
  std::size_t h_out, w_out;
  std::size_t ph, pw;

  std::size_t k() const { return c_in * kh * kw; }
  std::size_t n() const { return h_out * w_out; }
};

ConvGeometry conv_geometry(const Tensor& x, const Tensor& w, Padding pad) {
  if (x.rank() != 3) {
    throw std::invalid_argument("conv2d: input must be C x H x W, got " +
                                shape_string(x.shape()));
  }
  if (w.rank() != 4) {
    throw std::invalid_argument("conv2d: weight must be C_out x C_in x kh x kw, got " +
                                shape_string(w.shape()));
  }
  ConvGeometry g{};
  g.c_in = x.dim(0);
  g.h = x.dim(1);
  g.w = x.dim(2);
  g.c_out = w.dim(0);
  g.kh = w.dim(2);
  g.kw = w.dim(3);
  g.ph = pad.h;
  g.pw = pad.w;
  if (w.dim(1) != g.c_in) {
    throw std::invalid_argument("conv2d: input has " + std::to_string(g.c_in) +
                                " channels but weight expects " + std::to_string(w.dim(1)));
  }
  if (g.h + 2 * g.ph + 1 < g.kh || g.w + 2 * g.pw + 1 < g.kw) {
    throw std::invalid_argument("conv2d: negative output extent for input " +
                                shape_string(x.shape()) + " and kernel " +
                                shape_string(w.shape()));
  }
  g.h_out = g.h + 2 * g.ph + 1 - g.kh;
  g.w_out = g.w + 2 * g.pw + 1 - g.kw;
  return g;
}

// Output columns ow for which iw = ow + v - pw lies inside [0, w).
std::pair<std::size_t, std::size_t> valid_columns(const ConvGeometry& g, std::size_t v) {
  const std::size_t begin = g.pw > v ? g.pw - v : 0;
  const std::size_t end = g.w + g.pw > v ? std::min(g.w_out, g.w + g.pw - v) : 0;
  return {begin, std::max(begin, end)};
}

// cols[(ci*kh + u)*kw + v][oh*w_out + ow] = x[ci][oh + u - ph][ow + v - pw]
void im2col(const Tensor& x, const ConvGeometry& g, std::vector<double>& cols) {
  cols.assign(g.k() * g.n(), 0.0);
  const double* src = x.raw();
  for (std::size_t ci = 0; ci < g.c_in; ++ci) {
    for (std::size_t u = 0; u < g.kh; ++u) {
      for (std::size_t v = 0; v < g.kw; ++v) {
        double* row = cols.data() + ((ci * g.kh + u) * g.kw + v) * g.n();
        for (std::size_t oh = 0; oh < g.h_out; ++oh) {
          const std::ptrdiff_t ih = static_cast<std::ptrdiff_t>(oh + u) -
                                    static_cast<std::ptrdiff_t>(g.ph);
          if (ih < 0 || ih >= static_cast<std::ptrdiff_t>(g.h)) continue;
          const double* in_row = src + (ci * g.h + static_cast<std::size_t>(ih)) * g.w;
          double* out_row = row + oh * g.w_out;
          const auto [ow_begin, ow_end] = valid_columns(g, v);
          for (std::size_t ow = ow_begin; ow < ow_end; ++ow) out_row[ow] = in_row[ow + v - g.pw];
        }
      }
    }
  }
}

void col2im_accumulate(const std::vector<double>& cols, const ConvGeometry& g, Tensor& grad_x) {
  double* dst = grad_x.raw();
  for (std::size_t ci = 0; ci < g.c_in; ++ci) {
    for (std::size_t u = 0; u < g.kh; ++u) {
      for (std::size_t v = 0; v < g.kw; ++v) {
        const double* row = cols.data() + ((ci * g.kh + u) * g.kw + v) * g.n();
        for (std::size_t oh = 0; oh < g.h_out; ++oh) {
          const std::ptrdiff_t ih = static_cast<std::ptrdiff_t>(oh + u) -
                                    static_cast<std::ptrdiff_t>(g.ph);
          if (ih < 0 || ih >= static_cast<std::ptrdiff_t>(g.h)) continue;
          double* x_row = dst + (ci * g.h + static_cast<std::size_t>(ih)) * g.w;
          const double* c_row = row + oh * g.w_out;
          const auto [ow_begin, ow_end] = valid_columns(g, v);
          for (std::size_t ow = ow_begin; ow < ow_end; ++ow) x_row[ow + v - g.pw] += c_row[ow];
        }
      }
    }
  }
}

}  // namespace

Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor* bias, Padding pad) {
  const ConvGeometry g = conv_geometry(x, w, pad);
  if (bias && (bias->rank() != 1 || bias->dim(0) != g.c_out)) {
    throw std::invalid_argument("conv2d: bias shape " + shape_string(bias->shape()) +
                                " does not match " + std::to_string(g.c_out) + " outputs");
  }
  Tensor out({g.c_out, g.h_out, g.w_out});
  if (g.n() == 0) return out;

  std::vector<double> cols;
  im2col(x, g, cols);
  ConstMatrixMap wm(w.raw(), static_cast<Eigen::Index>(g.c_out), static_cast<Eigen::Index>(g.k()));
  ConstMatrixMap cm(cols.data(), static_cast<Eigen::Index>(g.k()), static_cast<Eigen::Index>(g.n()));
  MatrixMap om(out.raw(), static_cast<Eigen::Index>(g.c_out), static_cast<Eigen::Index>(g.n()));
  om.noalias() = wm * cm;
  if (bias) {
    for (std::size_t co = 0; co < g.c_out; ++co) {
      double* row = out.raw() + co * g.n();
      const double b = (*bias)[co];
      for (std::size_t i = 0; i < g.n(); ++i) row[i] += b;
    }
  }
  return out;
}

void conv2d_backward(const Tensor& x, const Tensor& w, const Tensor& grad_out, Padding pad,
                     Tensor* grad_x, Tensor* grad_w, Tensor* grad_bias) {
  const ConvGeometry g = conv_geometry(x, w, pad);
  if (grad_out.shape() != Shape{g.c_out, g.h_out, g.w_out}) {
    throw std::invalid_argument("conv2d_backward: gradient shape " +
                                shape_string(grad_out.shape()) + " does not match output");
  }
  if (g.n() == 0) return;
  ConstMatrixMap gm(grad_out.raw(), static_cast<Eigen::Index>(g.c_out),
                    static_cast<Eigen::Index>(g.n()));

  if (grad_bias) {
    for (std::size_t co = 0; co < g.c_out; ++co) {
      const double* row = grad_out.raw() + co * g.n();
      double s = 0.0;
      for (std::size_t i = 0; i < g.n(); ++i) s += row[i];
      (*grad_bias)[co] += s;
    }
  }
  if (grad_w) {
    std::vector<double> cols;
    im2col(x, g, cols);
    ConstMatrixMap cm(cols.data(), static_cast<Eigen::Index>(g.k()),
                      static_cast<Eigen::Index>(g.n()));
    MatrixMap gw(grad_w->raw(), static_cast<Eigen::Index>(g.c_out),
                 static_cast<Eigen::Index>(g.k()));
    gw.noalias() += gm * cm.transpose();
  }
  if (grad_x) {
    ConstMatrixMap wm(w.raw(), static_cast<Eigen::Index>(g.c_out),
                      static_cast<Eigen::Index>(g.k()));
    std::vector<double> cols(g.k() * g.n());
    MatrixMap cm(cols.data(), static_cast<Eigen::Index>(g.k()), static_cast<Eigen::Index>(g.n()));
    cm.noalias() = wm.transpose() * gm;
    col2im_accumulate(cols, g, *grad_x);
  }
}

Tensor pixel_shuffle(const Tensor& x, std::size_t s) {
  if (x.rank() != 3) throw std::invalid_argument("pixel_shuffle: input must be C x H x W");
  if (s == 0) throw std::invalid_argument("pixel_shuffle: upscale factor must be >= 1");
  const std::size_t cs = x.dim(0), h = x.dim(1), w = x.dim(2);
  if (cs % (s * s) != 0) {
    throw std::invalid_argument("pixel_shuffle: " + std::to_string(cs) +
                                " channels not divisible by " + std::to_string(s * s));
  }
  const std::size_t c = cs / (s * s);
  Tensor out({c, h * s, w * s});
  for (std::size_t g = 0; g < c; ++g)
    for (std::size_t i = 0; i < s; ++i)
      for (std::size_t j = 0; j < s; ++j) {
        const std::size_t src_c = g * s * s + i * s + j;
        for (std::size_t y = 0; y < h; ++y)
          for (std::size_t xx = 0; xx < w; ++xx) out.at(g, y * s + i, xx * s + j) = x.at(src_c, y, xx);
      }
  return out;
}

Tensor pixel_unshuffle(const Tensor& x, std::size_t s) {
  if (x.rank() != 3) throw std::invalid_argument("pixel_unshuffle: input must be C x H x W");
  if (s == 0 || x.dim(1) % s != 0 || x.dim(2) % s != 0) {
    throw std::invalid_argument("pixel_unshuffle: spatial extent not divisible by factor");
  }
  const std::size_t c = x.dim(0), h = x.dim(1) / s, w = x.dim(2) / s;
  Tensor out({c * s * s, h, w});
  for (std::size_t g = 0; g < c; ++g)
    for (std::size_t i = 0; i < s; ++i)
      for (std::size_t j = 0; j < s; ++j) {
        const std::size_t dst_c = g * s * s + i * s + j;
        for (std::size_t y = 0; y < h; ++y)
          for (std::size_t xx = 0; xx < w; ++xx) out.at(dst_c, y, xx) = x.at(g, y * s + i, xx * s + j);
      }
  return out;
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor* bias) {
  if (x.rank() != 1 || w.rank() != 2 || w.dim(1) != x.dim(0)) {
    throw std::invalid_argument("linear: cannot apply weight " + shape_string(w.shape()) +
                                " to input " + shape_string(x.shape()));
  }
  const std::size_t out_dim = w.dim(0), in_dim = w.dim(1);
  if (bias && (bias->rank() != 1 || bias->dim(0) != out_dim)) {
    throw std::invalid_argument("linear: bias shape mismatch");
  }
  Tensor y({out_dim});
  for (std::size_t o = 0; o < out_dim; ++o) {
    const double* row = w.raw() + o * in_dim;
    double s = 0.0;
    for (std::size_t i = 0; i < in_dim; ++i) s += row[i] * x[i];
    y[o] = s + (bias ? (*bias)[o] : 0.0);
  }
  return y;
}

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::numbers::sqrt2)); }

double gelu_derivative(double x) {
  const double cdf = 0.5 * (1.0 + std::erf(x / std::numbers::sqrt2));
  const double pdf = std::exp(-0.5 * x * x) * std::numbers::inv_sqrtpi / std::numbers::sqrt2;
  return cdf + x * pdf;
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Tensor gaussian_window(std::size_t size, double sigma) {
  if (size == 0 || size % 2 == 0) throw std::invalid_argument("gaussian_window: size must be odd");
  Tensor g({size});
  const double center = static_cast<double>(size / 2);
  double total = 0.0;
  for (std::size_t i = 0; i < size; ++i) {
    const double d = static_cast<double>(i) - center;
    g[i] = std::exp(-(d * d) / (2.0 * sigma * sigma));
    total += g[i];
  }
  for (std::size_t i = 0; i < size; ++i) g[i] /= total;
  return g;
}

Tensor separable_filter_valid(const Tensor& x, const Tensor& window) {
  if (x.rank() != 3) throw std::invalid_argument("separable_filter_valid: input must be C x H x W");
  const std::size_t k = window.size();
  const std::size_t c = x.dim(0), h = x.dim(1), w = x.dim(2);
  if (h < k || w < k) {
    throw std::invalid_argument("separable_filter_valid: frame " + shape_string(x.shape()) +
                                " smaller than window " + std::to_string(k));
  }
  const std::size_t ho = h - k + 1, wo = w - k + 1;
  Tensor vert({c, ho, w});
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t y = 0; y < ho; ++y) {
      double* dst = &vert.at(ch, y, 0);
      for (std::size_t t = 0; t < k; ++t) {
        const double g = window[t];
        const double* src = x.raw() + (ch * h + y + t) * w;
        for (std::size_t xx = 0; xx < w; ++xx) dst[xx] += g * src[xx];
      }
    }
  Tensor out({c, ho, wo});
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t y = 0; y < ho; ++y) {
      const double* src = &vert.at(ch, y, 0);
      double* dst = &out.at(ch, y, 0);
      for (std::size_t xx = 0; xx < wo; ++xx) {
        double s = 0.0;
        for (std::size_t t = 0; t < k; ++t) s += window[t] * src[xx + t];
        dst[xx] = s;
      }
    }
  return out;
}

void separable_filter_valid_backward(const Tensor& grad_out, const Tensor& window, Tensor& grad_x) {
  const std::size_t k = window.size();
  const std::size_t c = grad_x.dim(0), h = grad_x.dim(1), w = grad_x.dim(2);
  const std::size_t ho = h - k + 1, wo = w - k + 1;
  Tensor grad_vert({c, ho, w});
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t y = 0; y < ho; ++y) {
      const double* g = grad_out.raw() + (ch * ho + y) * wo;
      double* dst = &grad_vert.at(ch, y, 0);
      for (std::size_t xx = 0; xx < wo; ++xx)
        for (std::size_t t = 0; t < k; ++t) dst[xx + t] += window[t] * g[xx];
    }
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t y = 0; y < ho; ++y) {
      const double* src = &grad_vert.at(ch, y, 0);
      for (std::size_t t = 0; t < k; ++t) {
        const double g = window[t];
        double* dst = &grad_x.at(ch, y + t, 0);
        for (std::size_t xx = 0; xx < w; ++xx) dst[xx] += g * src[xx];
      }
    }
}

Tensor avg_pool2(const Tensor& x) {
  if (x.rank() != 3) throw std::invalid_argument("avg_pool2: input must be C x H x W");
  const std::size_t c = x.dim(0), h = x.dim(1) / 2, w = x.dim(2) / 2;
  Tensor out({c, h, w});
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t xx = 0; xx < w; ++xx) {
        out.at(ch, y, xx) = 0.25 * (x.at(ch, 2 * y, 2 * xx) + x.at(ch, 2 * y, 2 * xx + 1) +
                                    x.at(ch, 2 * y + 1, 2 * xx) + x.at(ch, 2 * y + 1, 2 * xx + 1));
      }
  return out;
}

}  // namespace lrnerv
