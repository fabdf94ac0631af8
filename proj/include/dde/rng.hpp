#pragma once

#include <cstdint>
#include <random>

namespace dde {

std::uint64_t splitmix64(std::uint64_t x) noexcept;

// Independent substream seed for (seed, stream); used for per-row draws so
// serial and threaded runs produce identical output.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept;

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  // Uniform on [0, 1) built from the top 53 bits.
  double uniform() noexcept {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }
  bool bernoulli(double p) noexcept { return uniform() < p; }
  double normal(double mean, double sd) {
    return std::normal_distribution<double>(mean, sd)(engine_);
  }
  double poisson(double rate) {
    return static_cast<double>(std::poisson_distribution<long long>(rate)(engine_));
  }

  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace dde
