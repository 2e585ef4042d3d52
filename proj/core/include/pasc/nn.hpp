#pragma once

// Forward/backward passes of the codec networks. Exposed for gradient
// checking; regular callers should use encode/decode/train.

#include "pasc/codec.hpp"

#include <span>
#include <vector>

namespace pasc::nn {

/// One gradient buffer per parameter tensor, same order as CodecWeights.
using Gradients = std::vector<std::vector<double>>;

Gradients zero_gradients(const CodecWeights& w);

/// Channel-major copy of an image: [3][H][W].
std::vector<double> to_chw(const Image& img);
Image from_chw(std::span<const double> chw, int height, int width);

/// Encoder up to and including tanh (before the hard decision).
std::vector<double> encoder_soft(const CodecWeights& w, const CodecConfig& cfg, const Image& x);

/// Decoder from real-valued channel symbols (+1 for bit 1, -1 for bit 0);
/// returns [3][H][W] values in (-1, 1).
std::vector<double> decoder_soft(const CodecWeights& w, const CodecConfig& cfg, std::span<const double> symbols);

/// Probe objective sum_i coeff[i] * tanh_out[i] for the encoder and its gradient
/// with respect to the encoder parameters (accumulated into `grad` when non-null).
double encoder_probe(const CodecWeights& w, const CodecConfig& cfg, const Image& x, std::span<const double> coeff,
                     Gradients* grad);

/// Mean squared error between decoder_soft(symbols) and target, with the
/// gradient with respect to the decoder parameters.
double decoder_loss(const CodecWeights& w, const CodecConfig& cfg, std::span<const double> symbols,
                    const Image& target, Gradients* grad);

/// Per-sample factors of the two dense-layer weight gradients, kept so a
/// batch can add them with one matrix product instead of one outer product
/// per sample.
struct DenseFactors {
    std::vector<std::vector<double>> enc_out, enc_in;
    std::vector<std::vector<double>> dec_out, dec_in;
};

/// Adds the deferred outer products into grad and clears f.
void flush_dense(DenseFactors& f, Gradients& grad);

/// One training sample: encode, hard decision, optional flips (symbol
/// positions in `flips` are negated), decode, MSE against x. Backward pass
/// uses the straight-through rule across the quantizer and the channel.
/// With `defer`, the dense-layer weight gradients go to `defer` instead of grad.
double autoencoder_step(const CodecWeights& w, const CodecConfig& cfg, const Image& x, const std::vector<std::uint8_t>& flips,
                        Gradients* grad, DenseFactors* defer = nullptr);

/// Rounds every value to the nearest 32-bit float.
void round_to_float(std::vector<double>& values);

}  // namespace pasc::nn
