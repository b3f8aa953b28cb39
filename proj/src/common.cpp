// SPDX-License-Identifier: Apache-2.0
#include "mlmkit/common.hpp"

#include <cmath>

namespace mlmkit {

double Rng::uniform() {
    // 53 mantissa bits, [0, 1)
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
}

float Rng::uniform(float lo, float hi) {
    return lo + static_cast<float>(uniform()) * (hi - lo);
}

double Rng::normal() {
    // Box-Muller; u1 nudged away from zero so log stays finite.
    double u1 = uniform();
    double u2 = uniform();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

float Rng::normal(float mean, float stddev) {
    return mean + stddev * static_cast<float>(normal());
}

float Rng::truncated_normal(float mean, float stddev, double cutoff) {
    double z = normal();
    while (std::abs(z) > cutoff) z = normal();
    return mean + stddev * static_cast<float>(z);
}

int64_t Rng::below(int64_t n) {
    if (n <= 0) throw ContractError("Rng::below requires n > 0");
    const uint64_t un = static_cast<uint64_t>(n);
    const uint64_t limit = UINT64_MAX - UINT64_MAX % un;
    uint64_t x = next();
    while (x >= limit) x = next();
    return static_cast<int64_t>(x % un);
}

Rng Rng::fork(uint64_t stream) const {
    // splitmix64 over (seed, stream) gives a well-spread child seed
    uint64_t z = seed_ ^ (stream + 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return Rng(z ^ (z >> 31));
}

}  // namespace mlmkit
