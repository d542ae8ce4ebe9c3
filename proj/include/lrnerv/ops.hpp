#pragma once

#include <cstddef>

#include "lrnerv/tensor.hpp"

// Value-level kernels. Every kernel is a pure function of its inputs and
// reduces in a fixed order, so repeated calls are bitwise identical.
namespace lrnerv {

struct Padding {
  std::size_t h = 0;
  std::size_t w = 0;
};

// Zero-padded, stride-1 cross-correlation.
//   x: C_in x H x W, w: C_out x C_in x kh x kw, bias: C_out (optional)
//   out: C_out x (H + 2ph - kh + 1) x (W + 2pw - kw + 1)
Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor* bias, Padding pad);

// Adjoint of conv2d. Each non-null gradient output is accumulated into (+=).
void conv2d_backward(const Tensor& x, const Tensor& w, const Tensor& grad_out, Padding pad,
                     Tensor* grad_x, Tensor* grad_w, Tensor* grad_bias);

// (C*s*s) x H x W -> C x (H*s) x (W*s). Channel group g fills the s x s block
// of output channel g in row-major order.
Tensor pixel_shuffle(const Tensor& x, std::size_t s);
Tensor pixel_unshuffle(const Tensor& x, std::size_t s);

// y = W x + b for a vector x of length in, W: out x in.
Tensor linear(const Tensor& x, const Tensor& w, const Tensor* bias);

double gelu(double x);
double gelu_derivative(double x);
double sigmoid(double x);

// Normalized 1-D Gaussian of odd length `size`.
Tensor gaussian_window(std::size_t size, double sigma);

// Per-channel "valid" separable filtering: vertical pass then horizontal
// pass with the same 1-D window. C x H x W -> C x (H-k+1) x (W-k+1).
Tensor separable_filter_valid(const Tensor& x, const Tensor& window);
void separable_filter_valid_backward(const Tensor& grad_out, const Tensor& window, Tensor& grad_x);

// 2x2 average pooling with stride 2; odd trailing rows/columns are dropped.
Tensor avg_pool2(const Tensor& x);

}  // namespace lrnerv
