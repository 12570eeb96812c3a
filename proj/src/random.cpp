#include "attent/random.hpp"

#include <cmath>

#include "attent/errors.hpp"

namespace attent {

namespace {
std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}
}  // namespace

std::uint64_t RandomSource::next_u64() {
    state_ += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

double RandomSource::uniform01() {
    // 53 random bits, offset by half an ulp: strictly inside (0,1).
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double RandomSource::gaussian() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    const double u1 = uniform01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
}

double RandomSource::gumbel() { return gumbel_from_uniform(uniform01()); }

RandomSource RandomSource::child(std::uint64_t key) const {
    return RandomSource(mix64(seed_ ^ mix64(key ^ 0xa0761d6478bd642full)));
}

double gumbel_from_uniform(double u) {
    require(u > 0.0 && u < 1.0, "gumbel_from_uniform: u must lie in (0,1)");
    return -std::log(-std::log(u));
}

}  // namespace attent
