#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "lrnerv/autodiff.hpp"
#include "lrnerv/tensor.hpp"

namespace lrnerv {

inline constexpr double kDefaultRho = 0.25;

// Bottleneck rank ceil(rho * min(c_in, c_out)), at least 1.
// Throws std::invalid_argument for rho outside (0, 1] or zero channels.
std::size_t select_rank(std::size_t c_in, std::size_t c_out, double rho);

// Weight counts exclude the bias, which is identical for both forms.
std::size_t dense_param_count(std::size_t c_in, std::size_t c_out, std::size_t k);
std::size_t lr_param_count(std::size_t c_in, std::size_t c_out, std::size_t k, std::size_t rank);
// lr / dense = rank * (c_in + c_out) / (k * c_in * c_out)
double param_ratio(std::size_t c_in, std::size_t c_out, std::size_t k, std::size_t rank);

// A dense k x k convolution replaced by a k x 1 projection to `rank`
// channels followed by a 1 x k reconstruction to c_out channels. There is no
// nonlinearity between the two factors, so the pair is a single linear
// operator with effective kernel compose_effective_kernel().
struct LRConvLayer {
  Tensor proj;   // rank x c_in x k x 1
  Tensor recon;  // c_out x rank x 1 x k
  Tensor bias;   // c_out
  double rho = kDefaultRho;

  std::size_t rank() const { return proj.dim(0); }
  std::size_t c_in() const { return proj.dim(1); }
  std::size_t c_out() const { return recon.dim(0); }
  std::size_t kernel() const { return proj.dim(2); }
  std::size_t weight_count() const { return proj.size() + recon.size(); }
};

// Fan-in scaled uniform init: variance 2 / fan_in for proj, 1 / fan_in for
// recon (no activation between them), zero bias.
LRConvLayer init_lrconv(std::size_t c_in, std::size_t c_out, std::size_t k, double rho,
                        std::uint64_t seed);

// Z = conv_{k x 1}(x; proj), Y = conv_{1 x k}(Z; recon) + bias, "same" padding.
Tensor lrconv_forward(const LRConvLayer& layer, const Tensor& x);
Var lrconv_forward(Var x, Var proj, Var recon, Var bias);

// W_eff[co, ci, u, v] = sum_q recon[co, q, 0, v] * proj[q, ci, u, 0]
Tensor compose_effective_kernel(const LRConvLayer& layer);

// Set of decoder stages whose dense convolutions are factorized.
struct FactorizationPlan {
  std::vector<std::size_t> stages;  // sorted, unique
  double rho = kDefaultRho;

  bool contains(std::size_t stage) const;
  bool empty() const { return stages.empty(); }
  // "-" for the dense baseline, "a-b" for a contiguous range, else "a,b,c".
  std::string label() const;

  // Accepts "-", "none", "" (dense), "4", "3-4", "0,2,4", "0-1,4".
  static FactorizationPlan parse(std::string_view text, double rho = kDefaultRho);
};

}  // namespace lrnerv
