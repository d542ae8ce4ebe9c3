#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace lrnerv {

// Mixes a base seed with a stream tag so that independent parameter tensors
// draw from independent, reproducible streams.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag);

// Thin wrapper over mt19937_64 with distribution code that does not depend on
// the standard library implementation.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  Rng(std::uint64_t seed, std::string_view tag) : engine_(derive_seed(seed, tag)) {}

  std::uint64_t next() { return engine_(); }
  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);
  double normal();

 private:
  std::mt19937_64 engine_;
};

}  // namespace lrnerv
