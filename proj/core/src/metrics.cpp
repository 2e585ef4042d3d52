#include "pasc/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace pasc {

double mse(const Image& a, const Image& b) {
    require_same_shape(a, b, "mse");
    if (a.size() == 0) return 0.0;
    double acc = 0.0;
    const auto& x = a.data();
    const auto& y = b.data();
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - y[i];
        acc += d * d;
    }
    return acc / static_cast<double>(x.size());
}

double psnr_from_mse(double m) {
    if (m <= 0.0) return kPsnrCapDb;
    return std::min(kPsnrCapDb, 10.0 * std::log10(4.0 / m));
}

double psnr(const Image& a, const Image& b) { return psnr_from_mse(mse(a, b)); }

double ssim(const Image& a, const Image& b) {
    require_same_shape(a, b, "ssim");
    constexpr int kWin = 11;
    constexpr double kSigma = 1.5;
    constexpr double kRange = 2.0;
    constexpr double c1 = (0.01 * kRange) * (0.01 * kRange);
    constexpr double c2 = (0.03 * kRange) * (0.03 * kRange);
    if (a.height() < kWin || a.width() < kWin) throw ArgumentError("ssim: both dimensions must be at least 11");

    std::array<double, kWin * kWin> w{};
    double total = 0.0;
    for (int i = 0; i < kWin; ++i)
        for (int j = 0; j < kWin; ++j) {
            const double di = i - kWin / 2;
            const double dj = j - kWin / 2;
            total += w[i * kWin + j] = std::exp(-(di * di + dj * dj) / (2 * kSigma * kSigma));
        }
    for (auto& v : w) v /= total;

    const int rows = a.height() - kWin + 1;
    const int cols = a.width() - kWin + 1;
    double acc = 0.0;
    for (int k = 0; k < 3; ++k) {
        for (int r = 0; r < rows; ++r) {
            for (int c = 0; c < cols; ++c) {
                double mu_a = 0, mu_b = 0, e_aa = 0, e_bb = 0, e_ab = 0;
                for (int i = 0; i < kWin; ++i)
                    for (int j = 0; j < kWin; ++j) {
                        const double wt = w[i * kWin + j];
                        const double x = a.at(r + i, c + j, k);
                        const double y = b.at(r + i, c + j, k);
                        mu_a += wt * x;
                        mu_b += wt * y;
                        e_aa += wt * x * x;
                        e_bb += wt * y * y;
                        e_ab += wt * x * y;
                    }
                const double var_a = e_aa - mu_a * mu_a;
                const double var_b = e_bb - mu_b * mu_b;
                const double cov = e_ab - mu_a * mu_b;
                const double num = (2 * mu_a * mu_b + c1) * (2 * cov + c2);
                const double den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2);
                acc += num / den;
            }
        }
    }
    return acc / (3.0 * rows * cols);
}

double ber(const BitVector& sent, const BitVector& recv) {
    if (sent.size() != recv.size()) throw ArgumentError("ber: length mismatch");
    if (sent.empty()) return 0.0;
    std::size_t errors = 0;
    for (std::size_t i = 0; i < sent.size(); ++i) errors += (sent[i] != recv[i]);
    return static_cast<double>(errors) / static_cast<double>(sent.size());
}

MetricReport image_report(const Image& reference, const Image& estimate) {
    MetricReport r;
    r.mse = mse(reference, estimate);
    r.psnr_db = psnr_from_mse(r.mse);
    r.ssim = ssim(reference, estimate);
    return r;
}

}  // namespace pasc
