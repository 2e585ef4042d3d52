#pragma once

#include "pasc/types.hpp"

#include <optional>

namespace pasc {

/// PSNR reported for identical images.
inline constexpr double kPsnrCapDb = 99.0;

double mse(const Image& a, const Image& b);
/// Peak-to-peak range 2.0 (images live in [-1, 1]); capped at kPsnrCapDb.
double psnr(const Image& a, const Image& b);
double psnr_from_mse(double mse_value);

/// Windowed SSIM: 11x11 Gaussian window (sigma 1.5) over every fully
/// contained position, constants for dynamic range L = 2, averaged over
/// channels and positions.
double ssim(const Image& a, const Image& b);

/// Hamming distance / length.
double ber(const BitVector& sent, const BitVector& recv);

struct MetricReport {
    double mse = 0.0;
    double psnr_db = 0.0;
    double ssim = 0.0;
    std::optional<double> zero_ratio;
    std::optional<double> ber;
};

MetricReport image_report(const Image& reference, const Image& estimate);

}  // namespace pasc
