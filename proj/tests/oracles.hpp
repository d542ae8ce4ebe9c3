#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "lrnerv/autodiff.hpp"
#include "lrnerv/config.hpp"
#include "lrnerv/rng.hpp"
#include "lrnerv/tensor.hpp"

// Reference implementations used only by tests. None of them call the
// library's numerical kernels.
namespace oracle {

using lrnerv::Tensor;

// Direct triple-sum convolution over a zero-padded input. When `multiplies`
// is non-null it is incremented once per multiply executed.
Tensor direct_conv2d(const Tensor& x, const Tensor& w, const Tensor* bias, std::size_t ph, std::size_t pw,
                     std::uint64_t* multiplies = nullptr);

Tensor random_tensor(lrnerv::Shape shape, lrnerv::Rng& rng, double lo = -1.0, double hi = 1.0);

// Central differences of f with respect to every element of *x.
std::vector<double> numeric_gradient(const std::function<double()>& f, Tensor& x, double h = 1e-6);

// ||a - n||_2 / max(||a||_2, ||n||_2, 1e-12)
double relative_error(const Tensor& analytic, const std::vector<double>& numeric);

// SSIM of two constant patches a and b: (2ab + C1) / (a^2 + b^2 + C1) since
// both variances and the covariance vanish.
double constant_patch_ssim(double a, double b, double c1 = 1e-4);

double mse(const Tensor& a, const Tensor& b);

// Small five-stage decoder with a 16 x 32 output, cheap enough for
// finite-difference and determinism tests.
lrnerv::DecoderConfig tiny_config();

}  // namespace oracle
