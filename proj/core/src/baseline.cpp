#include "pasc/baseline.hpp"

#include <zlib.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>

namespace pasc {
namespace {

constexpr std::array<int, 64> kZigzag{0,  1,  8,  16, 9,  2,  3,  10, 17, 24, 32, 25, 18, 11, 4,  5,
                                      12, 19, 26, 33, 40, 48, 41, 34, 27, 20, 13, 6,  7,  14, 21, 28,
                                      35, 42, 49, 56, 57, 50, 43, 36, 29, 22, 15, 23, 30, 37, 44, 51,
                                      58, 59, 52, 45, 38, 31, 39, 46, 53, 60, 61, 54, 47, 55, 62, 63};

// JPEG Annex K luminance table, used for all three channels.
constexpr std::array<int, 64> kBaseQuant{16, 11, 10, 16, 24,  40,  51,  61,  12, 12, 14, 19, 26,  58,  60,  55,
                                         14, 13, 16, 24, 40,  57,  69,  56,  14, 17, 22, 29, 51,  87,  80,  62,
                                         18, 22, 37, 56, 68,  109, 103, 77,  24, 35, 55, 64, 81,  104, 113, 92,
                                         49, 64, 78, 87, 103, 121, 120, 101, 72, 92, 95, 98, 112, 100, 103, 99};

std::array<int, 64> quant_table(int quality) {
    const int scale = quality < 50 ? 5000 / quality : 200 - 2 * quality;
    std::array<int, 64> q{};
    for (int i = 0; i < 64; ++i) q[i] = std::clamp((kBaseQuant[i] * scale + 50) / 100, 1, 255);
    return q;
}

struct DctBasis {
    std::array<double, 64> c{};  // c[u * 8 + x]
    DctBasis() {
        for (int u = 0; u < 8; ++u) {
            const double a = u == 0 ? std::sqrt(1.0 / 8.0) : std::sqrt(2.0 / 8.0);
            for (int x = 0; x < 8; ++x) c[u * 8 + x] = a * std::cos((2 * x + 1) * u * std::numbers::pi / 16.0);
        }
    }
};

const DctBasis& basis() {
    static const DctBasis b;
    return b;
}

// Orthonormal separable 8x8 DCT-II (inverse when `inverse`).
std::array<double, 64> dct8x8(const std::array<double, 64>& in, bool inverse) {
    const auto& c = basis().c;
    std::array<double, 64> tmp{}, out{};
    for (int r = 0; r < 8; ++r)
        for (int u = 0; u < 8; ++u) {
            double acc = 0;
            for (int x = 0; x < 8; ++x) acc += in[r * 8 + x] * (inverse ? c[x * 8 + u] : c[u * 8 + x]);
            tmp[r * 8 + u] = acc;
        }
    for (int u = 0; u < 8; ++u)
        for (int v = 0; v < 8; ++v) {
            double acc = 0;
            for (int y = 0; y < 8; ++y) acc += tmp[y * 8 + u] * (inverse ? c[y * 8 + v] : c[v * 8 + y]);
            out[v * 8 + u] = acc;
        }
    return out;
}

class BitWriter {
public:
    void put(std::uint64_t value, int nbits) {
        for (int i = nbits - 1; i >= 0; --i) bits_.push_back(static_cast<std::uint8_t>((value >> i) & 1));
    }
    void ue(std::uint64_t v) {
        const std::uint64_t x = v + 1;
        const int len = std::bit_width(x);
        put(0, len - 1);
        put(x, len);
    }
    void se(std::int64_t v) { ue(v > 0 ? 2 * static_cast<std::uint64_t>(v) - 1 : 2 * static_cast<std::uint64_t>(-v)); }
    BitVector& bits() { return bits_; }

private:
    BitVector bits_;
};

struct ParseError {};

class BitReader {
public:
    BitReader(const BitVector& b, std::size_t begin, std::size_t end) : b_(b), pos_(begin), end_(end) {}
    std::uint64_t get(int nbits) {
        if (end_ - pos_ < static_cast<std::size_t>(nbits)) throw ParseError{};
        std::uint64_t v = 0;
        for (int i = 0; i < nbits; ++i) v = (v << 1) | b_[pos_++];
        return v;
    }
    std::uint64_t ue() {
        int zeros = 0;
        while (get(1) == 0)
            if (++zeros > 32) throw ParseError{};
        return ((std::uint64_t{1} << zeros) | get(zeros)) - 1;
    }
    std::int64_t se() {
        const std::uint64_t k = ue();
        return (k & 1) ? static_cast<std::int64_t>((k + 1) / 2) : -static_cast<std::int64_t>(k / 2);
    }
    bool done() const { return pos_ == end_; }

private:
    const BitVector& b_;
    std::size_t pos_;
    std::size_t end_;
};

std::uint32_t crc_of_bits(const BitVector& bits, std::size_t count) {
    std::vector<unsigned char> bytes((count + 7) / 8, 0);
    for (std::size_t i = 0; i < count; ++i)
        if (bits[i]) bytes[i / 8] |= static_cast<unsigned char>(0x80u >> (i % 8));
    return static_cast<std::uint32_t>(crc32(0L, bytes.data(), static_cast<uInt>(bytes.size())));
}

constexpr std::size_t kHeaderBits = 16 + 16 + 7 + 32;

}  // namespace

BitVector source_encode(const Image& p, int quality) {
    if (p.height() % 8 != 0 || p.width() % 8 != 0 || p.height() == 0 || p.width() == 0)
        throw ArgumentError("source_encode: image dimensions must be positive multiples of 8");
    if (p.height() > 0xffff || p.width() > 0xffff) throw ArgumentError("source_encode: image too large");
    if (quality < 1 || quality > 100) throw ArgumentError("source_encode: quality must lie in 1..100");
    const auto q = quant_table(quality);

    BitWriter payload;
    std::array<std::int64_t, 3> prev_dc{};
    for (int by = 0; by < p.height(); by += 8)
        for (int bx = 0; bx < p.width(); bx += 8)
            for (int ch = 0; ch < 3; ++ch) {
                std::array<double, 64> block{};
                for (int y = 0; y < 8; ++y)
                    for (int x = 0; x < 8; ++x) block[y * 8 + x] = (p.at(by + y, bx + x, ch) + 1.0) * 127.5 - 128.0;
                const auto coef = dct8x8(block, false);
                std::array<std::int64_t, 64> zz{};
                for (int i = 0; i < 64; ++i)
                    zz[i] = std::llround(coef[kZigzag[i]] / q[kZigzag[i]]);
                payload.se(zz[0] - prev_dc[ch]);
                prev_dc[ch] = zz[0];
                int run = 0;
                for (int i = 1; i < 64; ++i) {
                    if (zz[i] == 0) {
                        ++run;
                        continue;
                    }
                    payload.ue(static_cast<std::uint64_t>(run) + 1);
                    payload.se(zz[i]);
                    run = 0;
                }
                payload.ue(0);
            }

    BitWriter out;
    out.put(static_cast<std::uint64_t>(p.height()), 16);
    out.put(static_cast<std::uint64_t>(p.width()), 16);
    out.put(static_cast<std::uint64_t>(quality), 7);
    out.put(payload.bits().size(), 32);
    auto& bits = out.bits();
    bits.insert(bits.end(), payload.bits().begin(), payload.bits().end());
    out.put(crc_of_bits(bits, bits.size()), 32);
    return std::move(bits);
}

std::optional<Image> source_decode(const BitVector& b) {
    if (b.size() < kSourceOverheadBits) return std::nullopt;
    try {
        BitReader header(b, 0, kHeaderBits);
        const int height = static_cast<int>(header.get(16));
        const int width = static_cast<int>(header.get(16));
        const int quality = static_cast<int>(header.get(7));
        const std::uint64_t payload_bits = header.get(32);
        if (payload_bits != b.size() - kSourceOverheadBits) return std::nullopt;
        const std::size_t body_end = kHeaderBits + payload_bits;
        BitReader crc(b, body_end, b.size());
        if (crc.get(32) != crc_of_bits(b, body_end)) return std::nullopt;
        if (height == 0 || width == 0 || height % 8 != 0 || width % 8 != 0 || quality < 1 || quality > 100)
            return std::nullopt;

        const auto q = quant_table(quality);
        Image img(height, width);
        BitReader r(b, kHeaderBits, body_end);
        std::array<std::int64_t, 3> prev_dc{};
        constexpr std::int64_t kLimit = 1 << 20;
        for (int by = 0; by < height; by += 8)
            for (int bx = 0; bx < width; bx += 8)
                for (int ch = 0; ch < 3; ++ch) {
                    std::array<std::int64_t, 64> zz{};
                    prev_dc[ch] += r.se();
                    zz[0] = prev_dc[ch];
                    int pos = 1;
                    for (;;) {
                        const std::uint64_t code = r.ue();
                        if (code == 0) break;
                        pos += static_cast<int>(std::min<std::uint64_t>(code - 1, 64));
                        if (pos > 63) throw ParseError{};
                        zz[pos++] = r.se();
                    }
                    std::array<double, 64> coef{};
                    for (int i = 0; i < 64; ++i) {
                        if (zz[i] > kLimit || zz[i] < -kLimit) throw ParseError{};
                        coef[kZigzag[i]] = static_cast<double>(zz[i]) * q[kZigzag[i]];
                    }
                    const auto block = dct8x8(coef, true);
                    for (int y = 0; y < 8; ++y)
                        for (int x = 0; x < 8; ++x)
                            img.at(by + y, bx + x, ch) = std::clamp((block[y * 8 + x] + 128.0) / 127.5 - 1.0, -1.0, 1.0);
                }
        if (!r.done()) return std::nullopt;
        return img;
    } catch (const ParseError&) {
        return std::nullopt;
    }
}

namespace {

constexpr int kStates = 1 << (kConvConstraint - 1);

// Encoder register: newest input bit at the top of a 7-bit window.
inline std::uint8_t parity(unsigned v) { return static_cast<std::uint8_t>(std::popcount(v) & 1); }

}  // namespace

BitVector chan_encode(const BitVector& b) {
    BitVector out;
    out.reserve(2 * (b.size() + kConvConstraint - 1));
    unsigned state = 0;  // previous six inputs, most recent in bit 5
    auto push = [&](unsigned bit) {
        const unsigned reg = (bit << 6) | state;
        out.push_back(parity(reg & kConvG0));
        out.push_back(parity(reg & kConvG1));
        state = reg >> 1;
    };
    for (auto bit : b) push(bit & 1u);
    for (int i = 0; i < kConvConstraint - 1; ++i) push(0);
    return out;
}

BitVector chan_decode(const BitVector& coded) {
    const std::size_t tail = kConvConstraint - 1;
    if (coded.size() % 2 != 0 || coded.size() < 2 * tail) return {};
    const std::size_t steps = coded.size() / 2;

    // Branch outputs for (state, input).
    std::array<std::array<std::uint8_t, 2>, kStates> out0{}, out1{};
    for (unsigned s = 0; s < kStates; ++s)
        for (unsigned bit = 0; bit < 2; ++bit) {
            const unsigned reg = (bit << 6) | s;
            out0[s][bit] = parity(reg & kConvG0);
            out1[s][bit] = parity(reg & kConvG1);
        }

    constexpr std::uint32_t kInf = std::numeric_limits<std::uint32_t>::max() / 2;
    std::array<std::uint32_t, kStates> metric{}, next{};
    metric.fill(kInf);
    metric[0] = 0;
    // decision[t][ns] = predecessor state
    std::vector<std::array<std::uint8_t, kStates>> from(steps);

    for (std::size_t t = 0; t < steps; ++t) {
        next.fill(kInf);
        const std::uint8_t r0 = coded[2 * t] & 1;
        const std::uint8_t r1 = coded[2 * t + 1] & 1;
        for (unsigned s = 0; s < kStates; ++s) {
            if (metric[s] >= kInf) continue;
            for (unsigned bit = 0; bit < 2; ++bit) {
                if (t >= steps - tail && bit == 1) continue;  // tail forces zeros
                const unsigned ns = ((bit << 6) | s) >> 1;
                const std::uint32_t m = metric[s] + (out0[s][bit] != r0) + (out1[s][bit] != r1);
                if (m < next[ns]) {
                    next[ns] = m;
                    from[t][ns] = static_cast<std::uint8_t>(s);
                }
            }
        }
        metric = next;
    }

    BitVector decoded(steps);
    unsigned s = 0;
    for (std::size_t t = steps; t-- > 0;) {
        decoded[t] = static_cast<std::uint8_t>((s >> 5) & 1);  // input bit shifted into bit 5
        s = from[t][s];
    }
    decoded.resize(steps - tail);
    return decoded;
}

namespace {

std::vector<std::size_t> permutation(std::size_t n) {
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::mt19937_64 rng(0x1a7e41eaULL ^ n);
    for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng() % i]);
    return perm;
}

}  // namespace

BitVector interleave(const BitVector& b) {
    const auto perm = permutation(b.size());
    BitVector out(b.size());
    for (std::size_t i = 0; i < b.size(); ++i) out[i] = b[perm[i]];
    return out;
}

BitVector deinterleave(const BitVector& b) {
    const auto perm = permutation(b.size());
    BitVector out(b.size());
    for (std::size_t i = 0; i < b.size(); ++i) out[perm[i]] = b[i];
    return out;
}

}  // namespace pasc
