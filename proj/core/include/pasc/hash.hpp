#pragma once

#include <cstdint>
#include <initializer_list>
#include <span>
#include <string_view>

namespace pasc {

// splitmix64 finalizer
constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Order-sensitive combination of 64-bit words. Used for every derived seed
/// (scene cells, per-trial seeds, per-frame channel draws).
constexpr std::uint64_t hash64(std::initializer_list<std::uint64_t> words) {
    std::uint64_t h = 0x6a09e667f3bcc908ULL;
    for (auto w : words) h = mix64(h ^ mix64(w));
    return h;
}

constexpr std::uint64_t hash_string(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Bit pattern of a double, so real-valued parameters can enter a seed.
std::uint64_t double_bits(double v);

/// 64-bit FNV-1a over raw bytes.
std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes, std::uint64_t h = 0xcbf29ce484222325ULL);

}  // namespace pasc
