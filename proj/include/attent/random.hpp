#pragma once

#include <cstdint>

namespace attent {

/// Seeded splitmix64 stream with a fixed mapping to doubles, so the same seed
/// reproduces the same draws on every platform. Single-owner: never share one
/// source between logical consumers, derive children instead.
class RandomSource {
  public:
    explicit RandomSource(std::uint64_t seed) : seed_(seed), state_(seed) {}

    std::uint64_t next_u64();

    /// Uniform on the open interval (0,1).
    double uniform01();

    /// Standard normal via Box-Muller; draws two uniforms every other call.
    double gaussian();

    /// Standard Gumbel(0,1) draw.
    double gumbel();

    /// Independent stream derived from this source's seed and a key.
    RandomSource child(std::uint64_t key) const;

    std::uint64_t seed() const { return seed_; }

  private:
    std::uint64_t seed_;
    std::uint64_t state_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

/// -ln(-ln(u)) for u in (0,1); u = 1/e maps to exactly 0.
double gumbel_from_uniform(double u);

}  // namespace attent
