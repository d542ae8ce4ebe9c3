#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "lrnerv/tensor.hpp"

namespace lrnerv {

struct AdamConfig {
  double lr = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamConfig config;
  std::vector<Tensor> m;  // first moments, one per parameter
  std::vector<Tensor> v;  // second moments
  std::int64_t step = 0;
};

// One bias-corrected Adam update, in place. Moments are allocated on the first
// call. `lr` overrides config.lr when positive (used by the schedule).
void adam_step(std::span<Tensor* const> params, std::span<const Tensor> grads, AdamState& state,
               double lr = -1.0);

// Cosine decay from `base` at step 0 to `floor_fraction * base` at `total`.
double cosine_lr(double base, std::int64_t step, std::int64_t total, double floor_fraction = 0.1);

}  // namespace lrnerv
