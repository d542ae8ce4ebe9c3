#include "lrnerv/lrconv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "lrnerv/rng.hpp"

namespace lrnerv {

std::size_t select_rank(std::size_t c_in, std::size_t c_out, double rho) {
  if (c_in == 0 || c_out == 0) throw std::invalid_argument("select_rank: channel counts must be >= 1");
  if (!(rho > 0.0 && rho <= 1.0)) {
    throw std::invalid_argument("select_rank: rho must lie in (0, 1], got " + std::to_string(rho));
  }
  const std::size_t m = std::min(c_in, c_out);
  const double scaled = rho * static_cast<double>(m);
  // Absorb representation error so that e.g. 0.1 * 30 yields 3, not 4.
  const double r = std::ceil(scaled - 1e-9 * std::max(1.0, scaled));
  return std::clamp<std::size_t>(static_cast<std::size_t>(r), 1, m);
}

std::size_t dense_param_count(std::size_t c_in, std::size_t c_out, std::size_t k) {
  return k * k * c_in * c_out;
}

std::size_t lr_param_count(std::size_t c_in, std::size_t c_out, std::size_t k, std::size_t rank) {
  return k * rank * (c_in + c_out);
}

double param_ratio(std::size_t c_in, std::size_t c_out, std::size_t k, std::size_t rank) {
  return static_cast<double>(rank * (c_in + c_out)) / static_cast<double>(k * c_in * c_out);
}

LRConvLayer init_lrconv(std::size_t c_in, std::size_t c_out, std::size_t k, double rho,
                        std::uint64_t seed) {
  const std::size_t r = select_rank(c_in, c_out, rho);
  LRConvLayer layer;
  layer.rho = rho;
  layer.proj = Tensor({r, c_in, k, 1});
  layer.recon = Tensor({c_out, r, 1, k});
  layer.bias = Tensor({c_out});

  const double proj_bound = std::sqrt(6.0 / static_cast<double>(c_in * k));
  Rng proj_rng(seed, "proj");
  for (double& v : layer.proj.data()) v = proj_rng.uniform(-proj_bound, proj_bound);

  const double recon_bound = std::sqrt(3.0 / static_cast<double>(r * k));
  Rng recon_rng(seed, "recon");
  for (double& v : layer.recon.data()) v = recon_rng.uniform(-recon_bound, recon_bound);
  return layer;
}

Tensor lrconv_forward(const LRConvLayer& layer, const Tensor& x) {
  if (x.rank() != 3 || x.dim(0) != layer.c_in()) {
    throw std::invalid_argument("lrconv_forward: input " + shape_string(x.shape()) +
                                " does not have " + std::to_string(layer.c_in()) + " channels");
  }
  const std::size_t half = layer.kernel() / 2;
  const Tensor z = conv2d(x, layer.proj, nullptr, Padding{half, 0});
  return conv2d(z, layer.recon, &layer.bias, Padding{0, half});
}

Var lrconv_forward(Var x, Var proj, Var recon, Var bias) {
  if (x.value().rank() != 3 || x.value().dim(0) != proj.value().dim(1)) {
    throw std::invalid_argument("lrconv_forward: input " + shape_string(x.shape()) +
                                " does not match projection " + shape_string(proj.shape()));
  }
  const std::size_t half = proj.value().dim(2) / 2;
  const Var z = ad::conv2d(x, proj, Padding{half, 0});
  return ad::conv2d(z, recon, bias, Padding{0, half});
}

Tensor compose_effective_kernel(const LRConvLayer& layer) {
  const std::size_t r = layer.rank(), c_in = layer.c_in(), c_out = layer.c_out();
  const std::size_t k = layer.kernel();
  if (layer.proj.shape() != Shape{r, c_in, k, 1} || layer.recon.shape() != Shape{c_out, r, 1, k}) {
    throw std::invalid_argument("compose_effective_kernel: malformed layer");
  }
  Tensor w({c_out, c_in, k, k});
  for (std::size_t co = 0; co < c_out; ++co)
    for (std::size_t ci = 0; ci < c_in; ++ci)
      for (std::size_t u = 0; u < k; ++u)
        for (std::size_t v = 0; v < k; ++v) {
          double s = 0.0;
          for (std::size_t q = 0; q < r; ++q) {
            s += layer.recon[(co * r + q) * k + v] * layer.proj[(q * c_in + ci) * k + u];
          }
          w[((co * c_in + ci) * k + u) * k + v] = s;
        }
  return w;
}

bool FactorizationPlan::contains(std::size_t stage) const {
  return std::binary_search(stages.begin(), stages.end(), stage);
}

std::string FactorizationPlan::label() const {
  if (stages.empty()) return "-";
  const bool contiguous = stages.back() - stages.front() + 1 == stages.size();
  std::ostringstream os;
  if (stages.size() == 1) {
    os << stages.front();
  } else if (contiguous) {
    os << stages.front() << '-' << stages.back();
  } else {
    for (std::size_t i = 0; i < stages.size(); ++i) os << (i ? "," : "") << stages[i];
  }
  return os.str();
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

std::size_t parse_index(std::string_view s, std::string_view whole) {
  s = trim(s);
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    throw std::invalid_argument("bad stage set '" + std::string(whole) + "'");
  }
  return v;
}

}  // namespace

FactorizationPlan FactorizationPlan::parse(std::string_view text, double rho) {
  FactorizationPlan plan;
  plan.rho = rho;
  const std::string_view t = trim(text);
  if (t.empty() || t == "-" || t == "\xE2\x88\x92" || t == "none" || t == "dense") return plan;

  std::size_t start = 0;
  while (start <= t.size()) {
    const std::size_t comma = t.find(',', start);
    const std::string_view item =
        trim(t.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    const std::size_t dash = item.find('-');
    if (dash == std::string_view::npos) {
      plan.stages.push_back(parse_index(item, text));
    } else {
      const std::size_t lo = parse_index(item.substr(0, dash), text);
      const std::size_t hi = parse_index(item.substr(dash + 1), text);
      if (lo > hi) throw std::invalid_argument("bad stage range '" + std::string(item) + "'");
      for (std::size_t s = lo; s <= hi; ++s) plan.stages.push_back(s);
    }
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  std::sort(plan.stages.begin(), plan.stages.end());
  plan.stages.erase(std::unique(plan.stages.begin(), plan.stages.end()), plan.stages.end());
  return plan;
}

}  // namespace lrnerv
