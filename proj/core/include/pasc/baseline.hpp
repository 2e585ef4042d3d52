#pragma once

// Conventional separate source/channel coding: an 8x8 block-DCT image codec
// protected by a rate-1/2 convolutional code. Stands in for a JPEG + LDPC
// chain; any residual bit error makes the source decoder report failure.

#include "pasc/types.hpp"

#include <cstdint>
#include <optional>

namespace pasc {

inline constexpr int kDefaultQuality = 75;

/// Stream layout: 16-bit height, 16-bit width, 7-bit quality, 32-bit payload
/// length, payload, then a CRC-32 over header and payload. Payload: per 8x8
/// block and channel, a signed Exp-Golomb DC difference, then (run + 1,
/// level) pairs in zigzag order as Exp-Golomb codes, closed by a 0 (EOB).
BitVector source_encode(const Image& p, int quality = kDefaultQuality);

/// nullopt when the checksum fails or the stream does not parse.
std::optional<Image> source_decode(const BitVector& b);

/// Bits in the stream that are not payload (header + checksum).
inline constexpr std::size_t kSourceOverheadBits = 16 + 16 + 7 + 32 + 32;

/// Constraint length 7, generators 171/133 (octal), six zero tail bits.
/// Output: 2 * (|b| + 6) bits, interleaved (g0, g1) per input bit.
BitVector chan_encode(const BitVector& b);

/// Hard-decision Viterbi over the terminated trellis.
BitVector chan_decode(const BitVector& coded);

/// Fixed pseudo-random permutation of a coded block, so that adjacent coded
/// bits land on distant subcarriers. Depends only on the block length.
BitVector interleave(const BitVector& b);
BitVector deinterleave(const BitVector& b);

inline constexpr int kConvConstraint = 7;
inline constexpr unsigned kConvG0 = 0171;
inline constexpr unsigned kConvG1 = 0133;

}  // namespace pasc
