#include "pasc/phy.hpp"

#include "pasc/hash.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <random>

namespace pasc {
namespace {

// FFTW plans are created once per size under a lock; executing a plan on
// other buffers (new-array execute) is thread-safe.
struct DftPlans {
    fftw_plan forward;
    fftw_plan backward;
};

const DftPlans& plans_for(int n) {
    static std::mutex mu;
    static std::map<int, DftPlans> cache;
    std::lock_guard lock(mu);
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    std::vector<cplx> a(n), b(n);
    auto* in = reinterpret_cast<fftw_complex*>(a.data());
    auto* out = reinterpret_cast<fftw_complex*>(b.data());
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    DftPlans p{fftw_plan_dft_1d(n, in, out, FFTW_FORWARD, flags), fftw_plan_dft_1d(n, in, out, FFTW_BACKWARD, flags)};
    return cache.emplace(n, p).first->second;
}

// Unitary DFT in either direction.
void dft(std::vector<cplx>& in, std::vector<cplx>& out, bool inverse) {
    const int n = static_cast<int>(in.size());
    out.resize(n);
    const auto& p = plans_for(n);
    fftw_execute_dft(inverse ? p.backward : p.forward, reinterpret_cast<fftw_complex*>(in.data()),
                     reinterpret_cast<fftw_complex*>(out.data()));
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    for (auto& v : out) v *= scale;
}

constexpr double kInvSqrt2 = 0.70710678118654752440;

}  // namespace

void OfdmConfig::validate() const {
    if (n_subcarriers <= 0 || n_pilot <= 0 || n_data <= 0 || n_guard < 0)
        throw ConfigError("OFDM subcarrier counts must be positive");
    if (n_pilot + n_data + n_guard != n_subcarriers)
        throw ConfigError("pilot + data + guard subcarriers must equal the DFT size");
    if (n_guard < 1) throw ConfigError("DC must be a guard subcarrier");
    if (cp_len < 0 || cp_len >= n_subcarriers) throw ConfigError("cyclic prefix must be shorter than the symbol");
    if (symbols_per_frame <= 0) throw ConfigError("symbols_per_frame must be positive");
    if ((n_pilot + n_data) % n_pilot != 0) throw ConfigError("used subcarriers must be a multiple of the pilot count");
}

SubcarrierMap subcarrier_map(const OfdmConfig& cfg) {
    cfg.validate();
    const int used = cfg.n_pilot + cfg.n_data;
    const int below = used / 2;
    const int spacing = used / cfg.n_pilot;
    SubcarrierMap m;
    for (int u = 0; u < used; ++u) {
        const int freq = u < below ? u - below : u - below + 1;  // skip DC
        const int bin = (freq + cfg.n_subcarriers) % cfg.n_subcarriers;
        if (u % spacing == spacing / 2) {
            m.pilot_freq.push_back(freq);
            m.pilot_bin.push_back(bin);
        } else {
            m.data_freq.push_back(freq);
            m.data_bin.push_back(bin);
        }
    }
    return m;
}

std::vector<cplx> pilot_symbols(const OfdmConfig& cfg, int symbol_in_frame) {
    std::mt19937_64 rng(hash64({cfg.pilot_seed, static_cast<std::uint64_t>(symbol_in_frame)}));
    std::vector<cplx> out(cfg.n_pilot);
    for (auto& p : out) {
        const auto r = rng();
        p = cplx((r & 1) ? -kInvSqrt2 : kInvSqrt2, (r & 2) ? -kInvSqrt2 : kInvSqrt2);
    }
    return out;
}

std::vector<cplx> qpsk_mod(const BitVector& b) {
    if (b.size() % 2 != 0) throw ArgumentError("qpsk_mod: bit count must be even");
    std::vector<cplx> out(b.size() / 2);
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = cplx((1.0 - 2.0 * b[2 * i]) * kInvSqrt2, (1.0 - 2.0 * b[2 * i + 1]) * kInvSqrt2);
    return out;
}

BitVector qpsk_demod(std::span<const cplx> y) {
    BitVector out(2 * y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
        out[2 * i] = y[i].real() < 0.0 ? 1 : 0;
        out[2 * i + 1] = y[i].imag() < 0.0 ? 1 : 0;
    }
    return out;
}

Signal ofdm_tx(std::span<const cplx> data_syms, const OfdmConfig& cfg, int first_symbol_in_frame) {
    const auto map = subcarrier_map(cfg);
    if (data_syms.size() % static_cast<std::size_t>(cfg.n_data) != 0)
        throw ArgumentError("ofdm_tx: data symbol count must be a multiple of " + std::to_string(cfg.n_data));
    const std::size_t n_sym = data_syms.size() / cfg.n_data;
    const int N = cfg.n_subcarriers;
    Signal out;
    out.reserve(n_sym * cfg.samples_per_symbol());
    std::vector<cplx> freq(N), time;
    for (std::size_t s = 0; s < n_sym; ++s) {
        std::fill(freq.begin(), freq.end(), cplx{});
        const auto pilots = pilot_symbols(cfg, (first_symbol_in_frame + static_cast<int>(s)) % cfg.symbols_per_frame);
        for (int j = 0; j < cfg.n_pilot; ++j) freq[map.pilot_bin[j]] = pilots[j];
        for (int j = 0; j < cfg.n_data; ++j) freq[map.data_bin[j]] = data_syms[s * cfg.n_data + j];
        dft(freq, time, true);
        out.insert(out.end(), time.end() - cfg.cp_len, time.end());
        out.insert(out.end(), time.begin(), time.end());
    }
    return out;
}

std::vector<std::vector<cplx>> ofdm_demod(std::span<const cplx> signal, const OfdmConfig& cfg) {
    cfg.validate();
    const std::size_t len = cfg.samples_per_symbol();
    if (signal.size() % len != 0) throw ArgumentError("ofdm_demod: signal is not a whole number of OFDM symbols");
    std::vector<std::vector<cplx>> out(signal.size() / len);
    std::vector<cplx> time(cfg.n_subcarriers);
    for (std::size_t s = 0; s < out.size(); ++s) {
        std::copy_n(signal.begin() + s * len + cfg.cp_len, cfg.n_subcarriers, time.begin());
        dft(time, out[s], false);
    }
    return out;
}

void ChannelRealization::validate() const {
    if (taps.empty()) throw ConfigError("channel needs at least one tap");
    for (std::size_t i = 0; i < taps.size(); ++i) {
        if (taps[i].delay < 0) throw ConfigError("tap delays must be nonnegative");
        if (i > 0 && taps[i].delay <= taps[i - 1].delay) throw ConfigError("tap delays must be strictly increasing");
    }
}

void ChannelProfile::validate() const {
    if (delays.empty() || delays.size() != powers_db.size())
        throw ConfigError("channel profile needs matching, nonempty delay and power lists");
    for (std::size_t i = 0; i < delays.size(); ++i) {
        if (delays[i] < 0) throw ConfigError("tap delays must be nonnegative");
        if (i > 0 && delays[i] <= delays[i - 1]) throw ConfigError("tap delays must be strictly increasing");
        if (!std::isfinite(powers_db[i])) throw ConfigError("tap powers must be finite");
    }
}

std::vector<double> ChannelProfile::normalized_powers() const {
    std::vector<double> p(powers_db.size());
    double total = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) total += p[i] = std::pow(10.0, powers_db[i] / 10.0);
    for (auto& v : p) v /= total;
    return p;
}

ChannelRealization draw_channel(const ChannelProfile& profile, std::uint64_t rng_seed, double snr_db) {
    profile.validate();
    const auto powers = profile.normalized_powers();
    ChannelRealization ch;
    ch.snr_db = snr_db;
    std::mt19937_64 rng(rng_seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (std::size_t i = 0; i < powers.size(); ++i) {
        cplx g(std::sqrt(powers[i]), 0.0);
        if (profile.rayleigh) {
            const double sd = std::sqrt(powers[i] / 2.0);
            const double re = gauss(rng);
            const double im = gauss(rng);
            g = cplx(sd * re, sd * im);
        }
        ch.taps.push_back({profile.delays[i], g});
    }
    return ch;
}

std::vector<cplx> channel_response(const ChannelRealization& ch, int n_subcarriers) {
    std::vector<cplx> h(n_subcarriers);
    for (int k = 0; k < n_subcarriers; ++k)
        for (const auto& t : ch.taps)
            h[k] += t.gain * std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(k) * t.delay / n_subcarriers);
    return h;
}

Signal channel_apply(std::span<const cplx> sig, const ChannelRealization& ch, const OfdmConfig& cfg,
                     std::uint64_t rng_seed) {
    ch.validate();
    if (ch.taps.back().delay >= cfg.cp_len)
        throw ConfigError("tap delay " + std::to_string(ch.taps.back().delay) + " is not shorter than the cyclic prefix");
    Signal out(sig.size());
    for (const auto& t : ch.taps)
        for (std::size_t n = static_cast<std::size_t>(t.delay); n < sig.size(); ++n) out[n] += t.gain * sig[n - t.delay];
    if (std::isinf(ch.snr_db) && ch.snr_db > 0) return out;

    double power = 0.0;
    for (const auto& v : out) power += std::norm(v);
    power /= static_cast<double>(std::max<std::size_t>(1, out.size()));
    const double sd = std::sqrt(power / std::pow(10.0, ch.snr_db / 10.0) / 2.0);
    std::mt19937_64 rng(rng_seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (auto& v : out) {
        const double re = gauss(rng);
        const double im = gauss(rng);
        v += cplx(sd * re, sd * im);
    }
    return out;
}

std::vector<cplx> estimate_channel(std::span<const cplx> rx_pilots, const OfdmConfig& cfg, int symbol_in_frame) {
    const auto map = subcarrier_map(cfg);
    if (rx_pilots.size() != static_cast<std::size_t>(cfg.n_pilot))
        throw ArgumentError("estimate_channel: expected one received value per pilot");
    const auto tx = pilot_symbols(cfg, symbol_in_frame);
    std::vector<cplx> hp(cfg.n_pilot);
    for (int j = 0; j < cfg.n_pilot; ++j) hp[j] = rx_pilots[j] / tx[j];

    std::vector<cplx> h(cfg.n_data);
    const auto& pf = map.pilot_freq;
    for (int i = 0; i < cfg.n_data; ++i) {
        const int f = map.data_freq[i];
        if (f <= pf.front()) {
            h[i] = hp.front();
        } else if (f >= pf.back()) {
            h[i] = hp.back();
        } else {
            const auto hi = static_cast<std::size_t>(std::upper_bound(pf.begin(), pf.end(), f) - pf.begin());
            const std::size_t lo = hi - 1;
            const double t = static_cast<double>(f - pf[lo]) / (pf[hi] - pf[lo]);
            h[i] = cplx(hp[lo].real() + t * (hp[hi].real() - hp[lo].real()),
                        hp[lo].imag() + t * (hp[hi].imag() - hp[lo].imag()));
        }
    }
    return h;
}

std::vector<cplx> equalize(std::span<const cplx> y_data, std::span<const cplx> h_hat) {
    if (y_data.size() != h_hat.size()) throw ArgumentError("equalize: size mismatch");
    std::vector<cplx> out(y_data.size());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = std::abs(h_hat[i]) < kEqualizerFloor ? cplx{} : y_data[i] / h_hat[i];
    return out;
}

double snr_db_for_ebn0(double ebn0_db, const OfdmConfig& cfg) {
    const double used = cfg.n_pilot + cfg.n_data;
    return ebn0_db + 10.0 * std::log10(2.0 * used / cfg.n_subcarriers);
}

LinkResult transmit_bits(const BitVector& b, const OfdmConfig& cfg, const ChannelProfile& profile, double snr_db,
                         std::uint64_t rng_seed, const LinkOptions& opts) {
    cfg.validate();
    profile.validate();
    const auto map = subcarrier_map(cfg);
    const std::size_t per_frame = cfg.bits_per_frame();
    const std::size_t frames = std::max<std::size_t>(1, (b.size() + per_frame - 1) / per_frame);

    BitVector padded = b;
    std::mt19937_64 pad_rng(hash64({rng_seed, 0xbadULL}));
    while (padded.size() < frames * per_frame) padded.push_back(static_cast<std::uint8_t>(pad_rng() & 1));

    BitVector received;
    received.reserve(padded.size());
    for (std::size_t f = 0; f < frames; ++f) {
        const BitVector frame_bits(padded.begin() + f * per_frame, padded.begin() + (f + 1) * per_frame);
        const auto syms = qpsk_mod(frame_bits);
        const auto tx = ofdm_tx(syms, cfg);
        const auto ch = draw_channel(profile, hash64({rng_seed, f, 1}), snr_db);
        const auto rx = channel_apply(tx, ch, cfg, hash64({rng_seed, f, 2}));
        const auto bins = ofdm_demod(rx, cfg);
        const auto true_h = opts.perfect_csi ? channel_response(ch, cfg.n_subcarriers) : std::vector<cplx>{};

        std::vector<cplx> y_data(cfg.n_data), y_pilot(cfg.n_pilot), h_hat(cfg.n_data);
        for (int s = 0; s < cfg.symbols_per_frame; ++s) {
            for (int j = 0; j < cfg.n_data; ++j) y_data[j] = bins[s][map.data_bin[j]];
            if (opts.perfect_csi) {
                for (int j = 0; j < cfg.n_data; ++j) h_hat[j] = true_h[map.data_bin[j]];
            } else {
                for (int j = 0; j < cfg.n_pilot; ++j) y_pilot[j] = bins[s][map.pilot_bin[j]];
                h_hat = estimate_channel(y_pilot, cfg, s);
            }
            const auto bits = qpsk_demod(equalize(y_data, h_hat));
            received.insert(received.end(), bits.begin(), bits.end());
        }
    }
    received.resize(b.size());

    LinkResult result;
    result.stats.frames_used = static_cast<int>(frames);
    std::size_t errors = 0;
    for (std::size_t i = 0; i < b.size(); ++i) errors += (b[i] != received[i]);
    result.stats.ber = b.empty() ? 0.0 : static_cast<double>(errors) / static_cast<double>(b.size());
    result.bits = std::move(received);
    return result;
}

}  // namespace pasc
