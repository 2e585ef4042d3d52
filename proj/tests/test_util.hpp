#pragma once

#include "pasc/types.hpp"

#include <cstdint>
#include <random>

namespace pasc::test {

/// Uniform components in [lo, hi].
inline Image random_image(int h, int w, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
    Image img(h, w);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(lo, hi);
    for (auto& v : img.data()) v = u(rng);
    return img;
}

inline BitVector random_bits(std::size_t n, std::uint64_t seed) {
    BitVector b(n);
    std::mt19937_64 rng(seed);
    for (auto& x : b) x = static_cast<std::uint8_t>(rng() & 1);
    return b;
}

}  // namespace pasc::test
