#pragma once

#include "pasc/types.hpp"

#include <complex>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace pasc {

using cplx = std::complex<double>;
using Signal = std::vector<cplx>;

struct OfdmConfig {
    int n_subcarriers = 256;
    int n_pilot = 25;
    int n_data = 125;
    int n_guard = 106;
    int cp_len = 64;
    int symbols_per_frame = 40;
    std::uint64_t pilot_seed = 0x9110;

    void validate() const;
    int samples_per_symbol() const { return n_subcarriers + cp_len; }
    /// Payload bits carried by one frame (QPSK on every data subcarrier).
    int bits_per_frame() const { return 2 * n_data * symbols_per_frame; }
};

/// Where pilots and data sit. Used bins straddle DC (which stays a guard);
/// pilots take every (used / pilot)-th used bin, starting half a spacing in.
struct SubcarrierMap {
    /// Signed frequency index (negative below DC) and FFT bin of each subcarrier.
    std::vector<int> pilot_freq, pilot_bin;
    std::vector<int> data_freq, data_bin;
};

SubcarrierMap subcarrier_map(const OfdmConfig& cfg);

/// Known pilot symbols for OFDM symbol `symbol_in_frame`, seeded by cfg.pilot_seed.
std::vector<cplx> pilot_symbols(const OfdmConfig& cfg, int symbol_in_frame);

/// Gray-mapped QPSK: (b0, b1) -> ((1 - 2 b0) + i (1 - 2 b1)) / sqrt(2).
std::vector<cplx> qpsk_mod(const BitVector& b);
/// Hard decision on the signs; exact zero resolves to bit 0.
BitVector qpsk_demod(std::span<const cplx> y);

/// One OFDM symbol per n_data input symbols; each output symbol is cp_len +
/// n_subcarriers samples. The unitary inverse DFT keeps unit power per used bin.
Signal ofdm_tx(std::span<const cplx> data_syms, const OfdmConfig& cfg, int first_symbol_in_frame = 0);

/// CP removal and forward DFT; returns n_subcarriers bins per OFDM symbol.
std::vector<std::vector<cplx>> ofdm_demod(std::span<const cplx> signal, const OfdmConfig& cfg);

struct Tap {
    int delay = 0;  // samples
    cplx gain;
};

struct ChannelRealization {
    std::vector<Tap> taps;
    double snr_db = std::numeric_limits<double>::infinity();

    void validate() const;
};

struct ChannelProfile {
    std::vector<int> delays{0, 4, 10};
    std::vector<double> powers_db{0.0, -5.0, -10.0};
    /// Rayleigh gains redrawn per frame; false gives fixed real gains sqrt(power).
    bool rayleigh = true;

    void validate() const;
    /// Linear per-tap powers summing to one.
    std::vector<double> normalized_powers() const;

    static ChannelProfile sui5() { return {}; }
    /// Single unit tap with no fading: the AWGN channel.
    static ChannelProfile awgn() { return {{0}, {0.0}, false}; }
};

ChannelRealization draw_channel(const ChannelProfile& profile, std::uint64_t rng_seed,
                                double snr_db = std::numeric_limits<double>::infinity());

/// Frequency response of the taps on every FFT bin.
std::vector<cplx> channel_response(const ChannelRealization& ch, int n_subcarriers);

/// Linear convolution with the taps (output truncated to the input length)
/// plus complex white Gaussian noise at ch.snr_db relative to the mean power
/// of the noiseless received signal. Infinite snr_db disables noise.
Signal channel_apply(std::span<const cplx> sig, const ChannelRealization& ch, const OfdmConfig& cfg,
                     std::uint64_t rng_seed);

/// Least-squares estimates at the pilots, linearly interpolated (real and
/// imaginary parts separately) onto the data subcarriers; subcarriers beyond
/// the outermost pilots take the nearest pilot's estimate.
std::vector<cplx> estimate_channel(std::span<const cplx> rx_pilots, const OfdmConfig& cfg, int symbol_in_frame);

/// Bins with |h_hat| below this are erased (equalized to 0).
inline constexpr double kEqualizerFloor = 1e-6;

std::vector<cplx> equalize(std::span<const cplx> y_data, std::span<const cplx> h_hat);

struct LinkOptions {
    /// Equalize with the true channel response instead of pilot estimates.
    bool perfect_csi = false;
};

struct LinkStats {
    double ber = 0.0;
    int frames_used = 0;
};

struct LinkResult {
    BitVector bits;
    LinkStats stats;
};

/// Time-domain SNR that yields the given Eb/N0 on the data subcarriers.
double snr_db_for_ebn0(double ebn0_db, const OfdmConfig& cfg);

/// Full chain: QPSK -> OFDM -> per-frame channel draw and noise -> DFT ->
/// channel estimate -> equalize -> hard demod. Pads to whole frames and
/// strips the padding on return.
LinkResult transmit_bits(const BitVector& b, const OfdmConfig& cfg, const ChannelProfile& profile, double snr_db,
                         std::uint64_t rng_seed, const LinkOptions& opts = {});

}  // namespace pasc
