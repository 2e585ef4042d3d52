#include "pasc/phy.hpp"

#include "test_util.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <set>

using namespace pasc;
using pasc::test::random_bits;

namespace {

std::vector<cplx> random_qpsk(std::size_t n, std::uint64_t seed) { return qpsk_mod(random_bits(2 * n, seed)); }

// DFT of the tap vector, evaluated directly.
cplx dft_of_taps(const std::vector<Tap>& taps, int bin, int n) {
    cplx h{};
    for (const auto& t : taps) h += t.gain * std::polar(1.0, -2.0 * std::numbers::pi * bin * t.delay / n);
    return h;
}

ChannelRealization fixed_channel(std::vector<Tap> taps) {
    ChannelRealization ch;
    ch.taps = std::move(taps);
    return ch;
}

}  // namespace

TEST_SUITE("phy") {

TEST_CASE("subcarrier layout") {
    const OfdmConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    CHECK(cfg.bits_per_frame() == 10000);
    CHECK(cfg.samples_per_symbol() == 320);
    const auto m = subcarrier_map(cfg);
    CHECK(m.pilot_bin.size() == 25);
    CHECK(m.data_bin.size() == 125);
    std::set<int> used(m.pilot_bin.begin(), m.pilot_bin.end());
    used.insert(m.data_bin.begin(), m.data_bin.end());
    CHECK(used.size() == 150);
    CHECK(used.count(0) == 0);
    for (std::size_t j = 1; j < m.pilot_freq.size(); ++j) CHECK(m.pilot_freq[j] - m.pilot_freq[j - 1] >= 6);

    OfdmConfig bad;
    bad.n_guard = 100;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = OfdmConfig{};
    bad.cp_len = 256;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("QPSK mapping") {
    const auto s = qpsk_mod({0, 0, 1, 1, 1, 0});
    CHECK(std::abs(s[0] - cplx(1, 1) / std::sqrt(2.0)) < 1e-15);
    CHECK(std::abs(s[1] - cplx(-1, -1) / std::sqrt(2.0)) < 1e-15);
    CHECK(std::abs(s[2] - cplx(-1, 1) / std::sqrt(2.0)) < 1e-15);
    CHECK_THROWS_AS(qpsk_mod({1, 0, 1}), ArgumentError);

    const std::vector<cplx> y{cplx(-0.1, 0.9), cplx(0.0, 0.0)};
    CHECK(qpsk_demod(y) == BitVector{1, 0, 0, 0});

    const auto b = random_bits(2000, 1);
    CHECK(qpsk_demod(qpsk_mod(b)) == b);
    double power = 0.0;
    for (const auto& v : qpsk_mod(b)) power += std::norm(v);
    CHECK(power / 1000.0 == doctest::Approx(1.0));
}

TEST_CASE("OFDM transform round trip") {
    const OfdmConfig cfg;
    const auto syms = random_qpsk(3 * 125, 2);
    const auto sig = ofdm_tx(syms, cfg);
    CHECK(sig.size() == 3 * 320);
    // The cyclic prefix repeats the symbol tail.
    for (int i = 0; i < 64; ++i) CHECK(std::abs(sig[i] - sig[256 + i]) == 0.0);
    const auto bins = ofdm_demod(sig, cfg);
    const auto m = subcarrier_map(cfg);
    double worst = 0.0;
    for (int s = 0; s < 3; ++s) {
        for (int j = 0; j < 125; ++j) worst = std::max(worst, std::abs(bins[s][m.data_bin[j]] - syms[s * 125 + j]));
        const auto pilots = pilot_symbols(cfg, s);
        for (int j = 0; j < 25; ++j) worst = std::max(worst, std::abs(bins[s][m.pilot_bin[j]] - pilots[j]));
    }
    CHECK(worst < 1e-9);
    CHECK_THROWS_AS(ofdm_tx(random_qpsk(124, 3), cfg), ArgumentError);
}

TEST_CASE("pilots are reproducible from the pilot seed") {
    OfdmConfig a, b;
    CHECK(pilot_symbols(a, 3) == pilot_symbols(b, 3));
    CHECK(pilot_symbols(a, 3) != pilot_symbols(a, 4));
    b.pilot_seed = 77;
    CHECK(pilot_symbols(a, 3) != pilot_symbols(b, 3));
    for (const auto& p : pilot_symbols(a, 0)) CHECK(std::abs(p) == doctest::Approx(1.0));
}

TEST_CASE("channel draws") {
    const auto profile = ChannelProfile::sui5();
    CHECK(draw_channel(profile, 5).taps[1].gain == draw_channel(profile, 5).taps[1].gain);
    double total = 0.0;
    const int n = 10000;
    for (int i = 0; i < n; ++i)
        for (const auto& t : draw_channel(profile, static_cast<std::uint64_t>(i)).taps) total += std::norm(t.gain);
    CHECK(std::abs(total / n - 1.0) < 0.02);

    const auto p = profile.normalized_powers();
    double s = 0.0;
    for (double v : p) s += v;
    CHECK(s == doctest::Approx(1.0));
    CHECK(p[1] / p[0] == doctest::Approx(std::pow(10.0, -0.5)));

    const auto flat = draw_channel(ChannelProfile::awgn(), 1);
    const auto h = channel_response(flat, 256);
    for (const auto& v : h) CHECK(std::abs(v - h[0]) < 1e-15);

    ChannelProfile bad;
    bad.delays = {0, 4, 4};
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("channel application") {
    const OfdmConfig cfg;
    const auto sig = ofdm_tx(random_qpsk(125, 4), cfg);
    const auto unit = fixed_channel({{0, cplx(1, 0)}});
    CHECK(channel_apply(sig, unit, cfg, 1) == sig);

    SUBCASE("measured SNR") {
        auto noisy = unit;
        noisy.snr_db = 7.0;
        const auto many = ofdm_tx(random_qpsk(125 * 320, 5), cfg);
        const auto rx = channel_apply(many, noisy, cfg, 6);
        double ps = 0.0, pn = 0.0;
        for (std::size_t i = 0; i < many.size(); ++i) {
            ps += std::norm(many[i]);
            pn += std::norm(rx[i] - many[i]);
        }
        CHECK(many.size() >= 100000);
        CHECK(std::abs(10.0 * std::log10(ps / pn) - 7.0) < 0.2);
    }
    SUBCASE("taps beyond the cyclic prefix are rejected") {
        CHECK_THROWS_AS(channel_apply(sig, fixed_channel({{0, 1.0}, {64, 0.5}}), cfg, 1), ConfigError);
    }
    SUBCASE("post-FFT response equals the DFT of the taps") {
        const auto ch = fixed_channel({{0, cplx(0.8, 0.1)}, {7, cplx(-0.3, 0.4)}});
        const auto syms = random_qpsk(2 * 125, 7);
        const auto tx = ofdm_tx(syms, cfg);
        const auto bins = ofdm_demod(channel_apply(tx, ch, cfg, 1), cfg);
        const auto ref = ofdm_demod(tx, cfg);
        const auto resp = channel_response(ch, 256);
        double worst = 0.0;
        for (int s = 0; s < 2; ++s)
            for (int k = 0; k < 256; ++k) {
                if (std::abs(ref[s][k]) < 1e-12) continue;
                const cplx oracle = dft_of_taps(ch.taps, k, 256);
                worst = std::max(worst, std::abs(bins[s][k] / ref[s][k] - oracle));
                worst = std::max(worst, std::abs(resp[k] - oracle));
            }
        CHECK(worst < 1e-9);
    }
}

TEST_CASE("channel estimation") {
    const OfdmConfig cfg;
    const auto m = subcarrier_map(cfg);
    const auto tx = ofdm_tx(random_qpsk(125, 8), cfg);

    SUBCASE("flat channel is recovered exactly") {
        const cplx c(0.3, -0.7);
        const auto bins = ofdm_demod(channel_apply(tx, fixed_channel({{0, c}}), cfg, 1), cfg);
        std::vector<cplx> yp(25);
        for (int j = 0; j < 25; ++j) yp[j] = bins[0][m.pilot_bin[j]];
        for (const auto& h : estimate_channel(yp, cfg, 0)) CHECK(std::abs(h - c) < 1e-12);
    }
    SUBCASE("pilot estimates equal the DFT response") {
        const auto ch = fixed_channel({{0, cplx(1, 0)}, {3, cplx(0.5, 0.5)}});
        const auto bins = ofdm_demod(channel_apply(tx, ch, cfg, 1), cfg);
        const auto pilots = pilot_symbols(cfg, 0);
        for (int j = 0; j < 25; ++j)
            CHECK(std::abs(bins[0][m.pilot_bin[j]] / pilots[j] - dft_of_taps(ch.taps, m.pilot_bin[j], 256)) < 1e-9);
    }
    SUBCASE("estimation error falls with SNR") {
        const auto profile = ChannelProfile::sui5();
        double prev = 1e300;
        for (double snr : {0.0, 10.0, 20.0}) {
            double err = 0.0;
            for (int t = 0; t < 200; ++t) {
                auto ch = draw_channel(profile, static_cast<std::uint64_t>(t), snr);
                const auto bins = ofdm_demod(channel_apply(tx, ch, cfg, 1000 + t), cfg);
                const auto resp = channel_response(ch, 256);
                std::vector<cplx> yp(25);
                for (int j = 0; j < 25; ++j) yp[j] = bins[0][m.pilot_bin[j]];
                const auto h = estimate_channel(yp, cfg, 0);
                for (int j = 0; j < 125; ++j) err += std::norm(h[j] - resp[m.data_bin[j]]);
            }
            CHECK(err < prev);
            prev = err;
        }
    }
}

TEST_CASE("equalization") {
    const std::vector<cplx> y{cplx(1, 2), cplx(3, -1), cplx(0.5, 0.5)};
    const std::vector<cplx> h{cplx(0.5, 0), cplx(1e-7, 0), cplx(0, 1)};
    const auto x = equalize(y, h);
    CHECK(std::abs(x[0] - cplx(2, 4)) < 1e-15);
    CHECK(x[1] == cplx(0, 0));
    std::vector<cplx> y2 = y, h2 = h;
    const cplx k(-2.0, 0.5);
    for (auto& v : y2) v *= k;
    for (auto& v : h2) v *= k;
    const auto x2 = equalize(y2, h2);
    CHECK(std::abs(x2[0] - x[0]) < 1e-12);
    CHECK(std::abs(x2[2] - x[2]) < 1e-12);
    CHECK_THROWS_AS(equalize(y, std::vector<cplx>(2)), ArgumentError);
}

TEST_CASE("end-to-end bit transport") {
    const OfdmConfig cfg;
    SUBCASE("padding is stripped and results are deterministic") {
        const auto b = random_bits(12345, 9);
        const auto r = transmit_bits(b, cfg, ChannelProfile::sui5(), 10.0, 3);
        CHECK(r.bits.size() == b.size());
        CHECK(r.stats.frames_used == 2);
        CHECK(r.bits == transmit_bits(b, cfg, ChannelProfile::sui5(), 10.0, 3).bits);
    }
    SUBCASE("flat channel at 30 dB is error-free") {
        const auto b = random_bits(100000, 10);
        const auto r = transmit_bits(b, cfg, ChannelProfile::awgn(), 30.0, 4);
        CHECK(r.stats.ber == 0.0);
    }
    SUBCASE("BER does not increase with SNR over the fading profile") {
        const auto b = random_bits(1000000, 11);
        double prev = 1.0;
        for (double snr : {-5.0, 0.0, 5.0, 10.0}) {
            const double v = transmit_bits(b, cfg, ChannelProfile::sui5(), snr, 12).stats.ber;
            CHECK(v <= prev);
            prev = v;
        }
    }
}

}  // TEST_SUITE
